"""Named interval maps and map sequences used throughout the test bench.

Every entry is an explicit piecewise linear map on [0, 1].  The registry at
the bottom maps command line names to constructors.

    ramp             flat at 0, steep ramp on (1/2, 3/4], flat at 1
    shrinking_spike  ramp plus a spike of height 1 squeezed into [0, 1/(4 2^n)]
    tent             the full tent map with slope +-2
    truncated_tent   tent with its peak cut at a constant plateau value
    bistable         flat 0 / expanding ramp / identity segment / ramp / flat 1
    contraction      affine contraction with slope 1/2
    trapped_tent     truncated tent rebuilt with absorbing periodic windows
"""

from __future__ import annotations

from dataclasses import dataclass

from .maps import MapSequence, PiecewiseLinearMap, evaluate, iterate
from .periodic import decompose_tree, find_periodic_points

__all__ = [
    "ramp",
    "shrinking_spike",
    "shrinking_spike_seq",
    "tent",
    "truncated_tent",
    "bistable",
    "contraction",
    "constant_seq",
    "decaying_shift_seq",
    "settling_contraction_seq",
    "ConstructionError",
    "TrapLevel",
    "TrappedTent",
    "trapped_tent",
    "trapped_tent_map",
    "CASCADE_LAM",
    "GALLERY",
]

# Plateau parameter at which the truncated tent sits at the boundary of the
# period-doubling cascade (stored to seven digits; the construction below
# re-checks the periodic orbits it needs rather than assuming exactness).
CASCADE_LAM = 0.8249080


def ramp() -> PiecewiseLinearMap:
    """Uniform limit of the shrinking-spike family: 0 up to 1/2, then a
    slope-4 ramp reaching 1 at 3/4, then constant 1."""
    return PiecewiseLinearMap((0.0, 0.5, 0.75, 1.0), (0.0, 0.0, 1.0, 1.0))


def shrinking_spike(n: int) -> PiecewiseLinearMap:
    """n-th map of the spike family.

    Equals ``ramp`` outside [0, 1/(4 2^n)] and carries a tent-shaped spike
    of height 1 peaking at 1/(8 2^n).  The spikes shrink geometrically, so
    the family converges to ``ramp`` pointwise but not uniformly.
    """
    if n < 0:
        raise ValueError("spike index must be >= 0")
    if n > 1018:  # 1/(8 * 2^n) underflows to a subnormal or to zero
        raise ValueError(f"spike index {n} too large to represent")
    peak = 1.0 / (8.0 * 2.0**n)
    foot = 1.0 / (4.0 * 2.0**n)
    if foot <= 0.0 or peak <= 0.0 or peak >= foot or foot >= 0.5:
        raise ValueError(f"spike index {n} too large to represent")
    return PiecewiseLinearMap(
        (0.0, peak, foot, 0.5, 0.75, 1.0), (0.0, 1.0, 0.0, 0.0, 1.0, 1.0)
    )


def shrinking_spike_seq() -> MapSequence:
    """The spike family packaged with its uniform-limit candidate ``ramp``."""
    return MapSequence(
        generator=shrinking_spike, limit=ramp(), kind="shrinking-spike"
    )


def tent() -> PiecewiseLinearMap:
    """Full tent map: x -> 1 - |2x - 1|."""
    return PiecewiseLinearMap((0.0, 0.5, 1.0), (0.0, 1.0, 0.0))


def tent_value(x: float) -> float:
    """Closed-form tent value, kept for cross-checks against the map."""
    return 1.0 - abs(2.0 * x - 1.0)


def truncated_tent(lam: float = CASCADE_LAM) -> PiecewiseLinearMap:
    """Tent map with the peak replaced by a plateau.

    The map is constant at tent(tent(lam)) on [0, tent(lam)] and follows the
    tent elsewhere.  For the default parameter the resulting map sits at the
    boundary of the period-doubling cascade: its orbit tails decompose into
    2^k cyclically permuted portions for every modest k.

    lam must lie in (1/2, 1), exclusive.
    """
    if not (0.5 < lam < 1.0):
        raise ValueError(f"plateau parameter must be in (1/2, 1), got {lam!r}")
    edge = tent_value(lam)
    level = tent_value(edge)
    if edge < 0.5:
        return PiecewiseLinearMap((0.0, edge, 0.5, 1.0), (level, level, 1.0, 0.0))
    if edge == 0.5:
        return PiecewiseLinearMap((0.0, 0.5, 1.0), (1.0, 1.0, 0.0))
    return PiecewiseLinearMap((0.0, edge, 1.0), (level, level, 0.0))


def bistable() -> PiecewiseLinearMap:
    """Map with two flat absorbing ends and a neutral identity segment.

    Zero on [0, 0.2], slope 2 up to the identity segment on [0.4, 0.6],
    slope 2 again, and one on [0.8, 1].  Under bounded noise every orbit
    random-walks along the middle segment until one of the flat ends
    captures it.
    """
    return PiecewiseLinearMap(
        (0.0, 0.2, 0.4, 0.6, 0.8, 1.0), (0.0, 0.0, 0.4, 0.6, 1.0, 1.0)
    )


def contraction(y0: float = 0.25, y1: float = 0.75) -> PiecewiseLinearMap:
    """Affine map through (0, y0) and (1, y1); a contraction when |y1 - y0| < 1."""
    return PiecewiseLinearMap((0.0, 1.0), (y0, y1))


def constant_seq(f: PiecewiseLinearMap) -> MapSequence:
    """Sequence whose every term is f (autonomous dynamics)."""
    return MapSequence(generator=lambda n: f, limit=f, kind="constant")


def settling_contraction_seq(
    amplitude: float = 0.2, ratio: float = 0.5
) -> MapSequence:
    """The default contraction plus a geometrically dying vertical shift.

    Converges uniformly to ``contraction()``, whose fixed point 0.5 is
    attractive; the standard system for neighbourhood-return experiments.
    """
    return decaying_shift_seq(contraction(), amplitude, ratio)


def decaying_shift_seq(
    base: PiecewiseLinearMap, amplitude: float, ratio: float = 0.5
) -> MapSequence:
    """Vertical perturbations of ``base`` dying out geometrically.

    The n-th map adds amplitude * ratio**n to every value of ``base`` and
    clips into [0, 1], so sup_distance(f_n, base) <= amplitude * ratio**n
    and the sequence converges uniformly to ``base``.
    """
    if not (0.0 <= ratio < 1.0):
        raise ValueError("ratio must be in [0, 1)")

    def gen(n: int) -> PiecewiseLinearMap:
        shift = amplitude * ratio**n
        vals = tuple(min(1.0, max(0.0, v + shift)) for v in base.values)
        return PiecewiseLinearMap(base.breakpoints, vals)

    return MapSequence(generator=gen, limit=base, kind="decaying-shift")


class ConstructionError(RuntimeError):
    """Raised when the windowed rebuild's geometric premises fail.

    ``diagnostics`` holds the observed geometry (level, hull, candidate
    points, window bounds) so the failure can be reported verbatim.
    """

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class TrapLevel:
    """Window geometry installed at one doubling level.

    level         doubling level k; windows sit around period-2**k points
    period        2**k
    centers       the periodic points, one per level-k portion hull, in
                  spatial (left to right) order
    eps_by_index  per-center clearance to the nearest level-(k+1) child hull
    eps           the level radius actually used: min of eps_by_index
    chosen        spatial index of the window that receives the diminished
                  copy of the whole base graph (the clearance minimiser);
                  every other window receives a slope-1 translation
    residuals     |g^period(x) - x| per center, re-checked on the base map
    """

    level: int
    period: int
    centers: tuple
    eps_by_index: tuple
    eps: float
    chosen: int
    residuals: tuple

    @property
    def windows(self) -> tuple:
        """Open intervals (x - eps, x + eps) in spatial order."""
        return tuple((x - self.eps, x + self.eps) for x in self.centers)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "period": self.period,
            "centers": list(self.centers),
            "eps_by_index": list(self.eps_by_index),
            "eps": self.eps,
            "chosen": self.chosen,
            "residuals": list(self.residuals),
            "windows": [list(w) for w in self.windows],
        }


@dataclass(frozen=True)
class TrappedTent:
    """A truncated tent rebuilt with absorbing periodic windows.

    map     the rebuilt piecewise linear map
    base    the unmodified truncated tent it equals outside the windows
    depth   levels 1..depth carry windows
    lam     plateau parameter of the base map
    levels  per-level geometry; levels[k-1] describes level k
    """

    map: PiecewiseLinearMap
    base: PiecewiseLinearMap
    depth: int
    lam: float
    levels: tuple

    def level(self, k: int) -> TrapLevel:
        if not 1 <= k <= self.depth:
            raise ValueError(f"level must be in 1..{self.depth}, got {k}")
        return self.levels[k - 1]

    def windows(self, level: int | None = None) -> tuple:
        """Windows of one level, or of all levels merged in spatial order."""
        if level is not None:
            return self.level(level).windows
        return tuple(sorted(w for lv in self.levels for w in lv.windows))

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "lam": self.lam,
            "levels": [lv.to_dict() for lv in self.levels],
            "breakpoints": list(self.map.breakpoints),
            "values": list(self.map.values),
        }


def _sorted_child_gaps(level: int, hulls: list, child_hulls: list) -> list:
    """Pair each spatially sorted hull with its two children's inner gap.

    Containment is recomputed here rather than assumed from index
    arithmetic; raises if any child nests ambiguously or a hull does not
    have exactly two children.
    """
    children: list = [[] for _ in hulls]
    for clo, chi in child_hulls:
        owners = [j for j, (lo, hi) in enumerate(hulls) if lo <= clo and chi <= hi]
        if len(owners) != 1:
            raise ConstructionError(
                f"level {level}: child hull [{clo}, {chi}] nests in "
                f"{len(owners)} level hulls instead of exactly one",
                {"level": level, "child": (clo, chi), "hulls": tuple(hulls)},
            )
        children[owners[0]].append((clo, chi))
    gaps = []
    for j, kids in enumerate(children):
        if len(kids) != 2:
            raise ConstructionError(
                f"level {level} hull {j}: expected exactly two child hulls, "
                f"found {len(kids)}",
                {"level": level, "index": j, "children": tuple(kids)},
            )
        gaps.append((kids[0][1], kids[1][0]))
    return gaps


def _window_knots(
    base: PiecewiseLinearMap, x: float, eps: float, is_copy: bool
) -> tuple:
    """Knot list replacing ``base`` on the open window (x - eps, x + eps).

    The outer fifths join affinely to the base values at the window
    edges.  A translation window carries z -> z + (base(x) - x) on the
    middle three fifths.  A copy window carries the whole base graph
    scaled into the square [x +- (2/5)eps] x [base(x) +- (2/5)eps], with
    flat shoulders bridging the second and fourth fifths at the copy's
    edge values.
    """
    lo, hi = x - eps, x + eps
    inner_lo, inner_hi = x - 0.8 * eps, x + 0.8 * eps
    c = evaluate(base, x)
    knots = [(lo, evaluate(base, lo))]
    if is_copy:
        xlo = x - 0.4 * eps
        ylo = c - 0.4 * eps
        side = 0.8 * eps
        pts = [
            (xlo + side * b, ylo + side * v)
            for b, v in zip(base.breakpoints, base.values)
        ]
        knots.append((inner_lo, pts[0][1]))
        knots.extend(pts)
        knots.append((inner_hi, pts[-1][1]))
    else:
        offset = c - x
        knots.append((inner_lo, inner_lo + offset))
        knots.append((inner_hi, inner_hi + offset))
    knots.append((hi, evaluate(base, hi)))
    return lo, hi, knots


def trapped_tent(
    depth: int = 3,
    lam: float = CASCADE_LAM,
    orbit_len: int = 1_000_000,
    root_tol: float = 1e-12,
) -> TrappedTent:
    """Rebuild the truncated tent with one absorbing window per periodic point.

    For each level k = 1..depth the base map's orbit tail splits into
    2**k cyclically permuted portions, and between the two level-(k+1)
    children of each portion hull sits exactly one point x of the unique
    period-2**k orbit.  The map is replaced inside every window
    (x - eps_k, x + eps_k), where eps_k is the level's smallest clearance
    from a periodic point to its neighbouring child hulls:

    * the window attaining that minimum receives a 2/5-scale copy of the
      whole base graph, drawn in the square
      [x +- (2/5) eps_k] x [g(x) +- (2/5) eps_k] and flanked by flat
      shoulders out to x +- (4/5) eps_k;
    * every other window receives the slope-1 translation
      z -> z + (g(x) - x) on [x +- (4/5) eps_k];
    * the outer fifths of each window join affinely to the base map's
      values at the window edges, so the rebuilt map is continuous and
      equals the base map outside the windows.

    Inside the middle fifths nothing expands: a noisy orbit whose
    per-step noise radius stays comfortably below (2/5) eps_k, once deep
    in a level-k window, is handed from window to window around the
    period-2**k itinerary for ever.

    Deeper levels need exponentially finer geometry.  In double
    precision the base map's settled orbit is exactly periodic, so
    depths beyond 3 typically fail to resolve; the failure surfaces as a
    DecompositionError (portion split) or ConstructionError (window
    geometry), each carrying diagnostics.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1: level 1 carries the first windows")
    if depth > 5:
        raise ValueError(
            f"depth {depth} too deep: double precision cannot resolve the geometry"
        )
    base = truncated_tent(lam)
    tree = decompose_tree(base, depth + 1, orbit_len=orbit_len)

    levels = []
    for k in range(1, depth + 1):
        period = 2**k
        hulls = sorted(tree.levels[k].hulls)
        child_hulls = sorted(tree.levels[k + 1].hulls)
        gaps = _sorted_child_gaps(k, hulls, child_hulls)
        centers, clearances, residuals = [], [], []
        for i, (hull, gap) in enumerate(zip(hulls, gaps)):
            scan = find_periodic_points(base, period, tol=root_tol, domain=hull)
            plateaus = [
                (p.lo, p.hi) for p in scan.plateaus if p.hi > gap[0] and p.lo < gap[1]
            ]
            if plateaus:
                raise ConstructionError(
                    f"level {k} hull {i}: periodic plateau overlaps the child gap",
                    {"level": k, "index": i, "gap": gap, "plateaus": tuple(plateaus)},
                )
            inside = [p for p in scan.points() if gap[0] < p < gap[1]]
            if len(inside) != 1:
                raise ConstructionError(
                    f"level {k} hull {i}: expected exactly one period-{period} "
                    f"point in the child gap, found {len(inside)}",
                    {
                        "level": k,
                        "index": i,
                        "hull": hull,
                        "gap": gap,
                        "points": tuple(inside),
                    },
                )
            x = inside[0]
            centers.append(x)
            clearances.append(min(x - gap[0], gap[1] - x))
            residuals.append(abs(iterate(base, x, period) - x))
        eps = min(clearances)
        if eps <= 0.0:
            raise ConstructionError(
                f"level {k}: nonpositive window radius {eps}",
                {"level": k, "eps_by_index": tuple(clearances)},
            )
        levels.append(
            TrapLevel(
                level=k,
                period=period,
                centers=tuple(centers),
                eps_by_index=tuple(clearances),
                eps=eps,
                chosen=clearances.index(eps),
                residuals=tuple(residuals),
            )
        )

    windows = []
    for lv in levels:
        for i, x in enumerate(lv.centers):
            windows.append(_window_knots(base, x, lv.eps, is_copy=(i == lv.chosen)))
    windows.sort(key=lambda w: w[0])
    for (_, prev_hi, _), (next_lo, _, _) in zip(windows, windows[1:]):
        if prev_hi >= next_lo:
            raise ConstructionError(
                f"windows overlap: one ends at {prev_hi}, the next starts at {next_lo}",
                {"bounds": tuple((w[0], w[1]) for w in windows)},
            )
    if windows[0][0] <= 0.0 or windows[-1][1] >= 1.0:
        raise ConstructionError(
            "windows must lie strictly inside (0, 1)",
            {"bounds": tuple((w[0], w[1]) for w in windows)},
        )

    pairs = [
        (b, v)
        for b, v in zip(base.breakpoints, base.values)
        if not any(lo < b < hi for lo, hi, _ in windows)
    ]
    for _, _, knots in windows:
        pairs.extend(knots)
    pairs.sort(key=lambda p: p[0])
    deduped = [pairs[0]]
    for b, v in pairs[1:]:
        if b == deduped[-1][0]:
            if v != deduped[-1][1]:
                raise ConstructionError(
                    f"conflicting knot values at {b}: {deduped[-1][1]} vs {v}",
                    {"breakpoint": b, "values": (deduped[-1][1], v)},
                )
            continue
        deduped.append((b, v))
    rebuilt = PiecewiseLinearMap(
        tuple(b for b, _ in deduped), tuple(v for _, v in deduped)
    )
    return TrappedTent(
        map=rebuilt, base=base, depth=depth, lam=float(lam), levels=tuple(levels)
    )


def trapped_tent_map(
    depth: int = 3, lam: float = CASCADE_LAM, orbit_len: int = 1_000_000
) -> PiecewiseLinearMap:
    """The rebuilt map alone, for callers that do not need the geometry report."""
    return trapped_tent(depth=depth, lam=lam, orbit_len=orbit_len).map


# Command line registry.  Values are (builder, kind) where kind is "map" or
# "seq"; builders take keyword parameters collected from the config.
GALLERY = {
    "ramp": (ramp, "map"),
    "shrinking-spike": (shrinking_spike_seq, "seq"),
    "tent": (tent, "map"),
    "truncated-tent": (truncated_tent, "map"),
    "bistable": (bistable, "map"),
    "contraction": (contraction, "map"),
    "settling-contraction": (settling_contraction_seq, "seq"),
    "trapped-tent": (trapped_tent_map, "map"),
}
