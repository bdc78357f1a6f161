"""Periodic structure of piecewise linear interval maps.

This module locates periodic points (isolated orbits and intervals of
periodic points), classifies their attractivity, reconstructs the
period-doubling decomposition of an orbit's limit set into cyclically
permuted portions, and provides two trajectory-level probes: shadowing
of noisy trajectories by periodic itineraries, and a scan for orbit
pairs that come arbitrarily close while also separating (the Li-Yorke
signature).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .maps import MapSequence, PiecewiseLinearMap, evaluate, iterate
from .stochproc import noise_stream

__all__ = [
    "DecompositionError",
    "DecompositionTree",
    "IntervalDecomposition",
    "LiYorkePair",
    "LiYorkeReport",
    "PeriodicOrbit",
    "PeriodicScan",
    "Plateau",
    "ShadowResult",
    "ShadowSummary",
    "classify_attractivity",
    "decompose_omega",
    "decompose_tree",
    "find_periodic_points",
    "liyorke_scan",
    "orbit_multiplier",
    "shadow_candidates",
    "shadow_fraction",
    "shadow_test",
]

#: |multiplier| within this band of 1 forces the label "neutral".
NEUTRAL_BAND = 1e-6

#: Half-width used for finite-difference slope estimates.
DIFF_STEP = 1e-7

_LABELS = ("attractive", "repelling", "neutral", "inconclusive")


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class PeriodicOrbit:
    """A periodic orbit, stored in cyclic order starting at its least point.

    ``multiplier`` is the product of finite-difference slopes of the map
    along the orbit, i.e. an estimate of the derivative of the
    ``period``-fold composition.  ``isolated`` is False for orbits that
    merely represent a point chosen inside a plateau of periodic points.
    """

    period: int
    points: tuple[float, ...]
    label: str
    multiplier: float
    isolated: bool = True

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError("period must be positive")
        if len(self.points) != self.period:
            raise ValueError("orbit must list exactly one point per step of its period")
        if self.label not in _LABELS:
            raise ValueError(f"unknown label {self.label!r}")

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "points": list(self.points),
            "label": self.label,
            "multiplier": self.multiplier,
            "isolated": self.isolated,
        }


@dataclass(frozen=True)
class Plateau:
    """A closed interval of periodic points sharing one period.

    The scan reports zero-runs of the residual ``f^n(x) - x`` as plateaus
    rather than as errors: several of the maps treated here have entire
    segments of periodic points, and those segments are meaningful
    results (they shadow trajectories, for instance).
    """

    period: int
    lo: float
    hi: float
    label: str = "neutral"

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError("period must be positive")
        if not self.lo < self.hi:
            raise ValueError("plateau must have positive width")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def representatives(self, f: PiecewiseLinearMap) -> tuple[PeriodicOrbit, ...]:
        """Orbits through the plateau's endpoints and midpoint.

        The returned orbits carry ``isolated=False`` since each lies in a
        continuum of periodic points.
        """
        reps = []
        for p in (self.lo, self.midpoint, self.hi):
            pts = [p]
            for _ in range(self.period - 1):
                pts.append(float(evaluate(f, pts[-1])))
            reps.append(
                PeriodicOrbit(
                    period=self.period,
                    points=tuple(pts),
                    label=self.label,
                    multiplier=orbit_multiplier(f, pts),
                    isolated=False,
                )
            )
        return tuple(reps)

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "lo": self.lo,
            "hi": self.hi,
            "label": self.label,
        }


@dataclass(frozen=True)
class PeriodicScan:
    """Everything found at one period: isolated orbits plus plateaus.

    ``resolution_warning`` is set when detected roots are packed so
    tightly relative to the scan grid that further roots may have been
    missed between grid nodes.
    """

    period: int
    orbits: tuple[PeriodicOrbit, ...]
    plateaus: tuple[Plateau, ...]
    resolution_warning: bool
    grid_size: int
    tol: float

    def __iter__(self) -> Iterator[Union[PeriodicOrbit, Plateau]]:
        yield from self.orbits
        yield from self.plateaus

    def points(self) -> tuple[float, ...]:
        """All isolated periodic points, sorted ascending."""
        out: list[float] = []
        for orbit in self.orbits:
            out.extend(orbit.points)
        return tuple(sorted(out))

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "orbits": [o.to_dict() for o in self.orbits],
            "plateaus": [p.to_dict() for p in self.plateaus],
            "resolution_warning": self.resolution_warning,
            "grid_size": self.grid_size,
            "tol": self.tol,
        }


class DecompositionError(RuntimeError):
    """Raised when an orbit tail does not split into disjoint portions.

    ``diagnostics`` holds the offending geometry so callers (and the CLI
    error path) can report what was actually observed.
    """

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class IntervalDecomposition:
    """Convex hulls of the 2**level cyclically permuted portions of an
    orbit tail.

    ``hulls`` is in dynamical order: ``hulls[0]`` is the leftmost hull
    and the map sends the portion in ``hulls[j]`` into
    ``hulls[(j + 1) % len(hulls)]``.  ``margin`` is the smallest gap
    between spatially adjacent hulls (infinite for a single hull);
    ``invariance_defect`` is the largest distance by which the image of
    an observed portion point escapes the successor hull.
    """

    level: int
    hulls: tuple[tuple[float, float], ...]
    margin: float
    invariance_defect: float
    tol: float
    orbit_len: int
    transient: int
    x0: float
    cluster_sizes: tuple[int, ...]

    def hull_containing(self, x: float) -> int | None:
        """Index of the hull containing ``x``, or None."""
        for j, (lo, hi) in enumerate(self.hulls):
            if lo <= x <= hi:
                return j
        return None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "hulls": [[lo, hi] for lo, hi in self.hulls],
            # a single hull has no neighbour gap; JSON carries that as null
            "margin": self.margin if np.isfinite(self.margin) else None,
            "invariance_defect": self.invariance_defect,
            "tol": self.tol,
            "orbit_len": self.orbit_len,
            "transient": self.transient,
            "x0": self.x0,
            "cluster_sizes": list(self.cluster_sizes),
        }


@dataclass(frozen=True)
class DecompositionTree:
    """Decompositions at levels 0..max_level sharing one sampled orbit.

    ``parents[k][j]`` is the index of the level ``k-1`` hull containing
    hull ``j`` of level ``k``; ``parents[0]`` is empty.
    """

    levels: tuple[IntervalDecomposition, ...]
    parents: tuple[tuple[int, ...], ...]

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    def children(self, level: int, index: int) -> tuple[int, ...]:
        """Indices of level ``level + 1`` hulls nested in the given hull."""
        if level + 1 > self.max_level:
            return ()
        return tuple(
            j for j, p in enumerate(self.parents[level + 1]) if p == index
        )

    def to_dict(self) -> dict:
        return {
            "levels": [d.to_dict() for d in self.levels],
            "parents": [list(p) for p in self.parents],
        }


@dataclass(frozen=True)
class ShadowResult:
    """Outcome of matching one trajectory against periodic itineraries."""

    passed: bool
    sup_error: float
    candidate_index: int
    phase: int
    orbit: PeriodicOrbit
    eps: float
    window: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "sup_error": self.sup_error,
            "candidate_index": self.candidate_index,
            "phase": self.phase,
            "orbit": self.orbit.to_dict(),
            "eps": self.eps,
            "window": list(self.window),
        }


@dataclass(frozen=True)
class ShadowSummary:
    """Shadowing results aggregated over a batch of trajectories.

    ``by_candidate[i]`` counts passing trajectories whose best match was
    candidate ``i`` of the caller's list.
    """

    n_trajectories: int
    n_passed: int
    by_candidate: tuple[int, ...]
    eps: float
    window: tuple[int, int]

    @property
    def fraction(self) -> float:
        return self.n_passed / self.n_trajectories

    def to_dict(self) -> dict:
        return {
            "n_trajectories": self.n_trajectories,
            "n_passed": self.n_passed,
            "fraction": self.fraction,
            "by_candidate": list(self.by_candidate),
            "eps": self.eps,
            "window": list(self.window),
        }


@dataclass(frozen=True)
class LiYorkePair:
    """One sampled pair together with its observed distance extremes."""

    x0: float
    y0: float
    min_distance: float
    max_distance: float

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "y0": self.y0,
            "min_distance": self.min_distance,
            "max_distance": self.max_distance,
        }


@dataclass(frozen=True)
class LiYorkeReport:
    """Pairs whose orbits both approach and separate past the thresholds."""

    n_pairs: int
    horizon: int
    burn_in: int
    closeness: float
    separation: float
    flagged: tuple[LiYorkePair, ...]
    master_seed: int

    @property
    def n_flagged(self) -> int:
        return len(self.flagged)

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "closeness": self.closeness,
            "separation": self.separation,
            "n_flagged": self.n_flagged,
            "flagged": [p.to_dict() for p in self.flagged],
            "master_seed": self.master_seed,
        }


# ---------------------------------------------------------------------------
# orbit iteration


def _orbit(f: PiecewiseLinearMap, x0: float, n: int) -> np.ndarray:
    """Iterate ``f`` from ``x0`` for ``n`` steps, returning all n+1 states.

    Uses a plain bisect loop with the same clamp-then-interpolate
    arithmetic as :func:`noisymaps.maps.evaluate`; the results are
    bitwise identical and the loop is about twice as fast for long
    scalar orbits.
    """
    if n < 0:
        raise ValueError("orbit length must be nonnegative")
    if not np.isfinite(x0):
        raise ValueError("starting point must be finite")
    bp, vals = f.knots
    bpl = bp.tolist()
    vl = vals.tolist()
    out = np.empty(n + 1)
    x = float(x0)
    out[0] = x
    for i in range(n):
        if x <= 0.0:
            x = vl[0]
        elif x >= 1.0:
            x = vl[-1]
        else:
            j = bisect_right(bpl, x) - 1
            x = (vl[j + 1] - vl[j]) / (bpl[j + 1] - bpl[j]) * (x - bpl[j]) + vl[j]
        out[i + 1] = x
    return out


# ---------------------------------------------------------------------------
# periodic point detection


def _proper_divisors(n: int) -> tuple[int, ...]:
    return tuple(d for d in range(1, n) if n % d == 0)


def orbit_multiplier(
    f: PiecewiseLinearMap, points: Sequence[float], step: float = DIFF_STEP
) -> float:
    """Finite-difference derivative of the ``len(points)``-fold composition.

    Computed as the product of per-point slope estimates along the
    orbit.  Central differences are used in the interior; at the domain
    endpoints the difference is one-sided, so the estimate reflects the
    map's behavior inside [0, 1] rather than its constant extension.
    """
    m = 1.0
    for p in points:
        lo = max(p - step, 0.0)
        hi = min(p + step, 1.0)
        if hi <= lo:
            raise ValueError("difference step too large for the domain")
        m *= (float(evaluate(f, hi)) - float(evaluate(f, lo))) / (hi - lo)
    return m


def _bisect_root(residual, lo: float, hi: float, tol: float) -> float:
    """Bisection for a sign change of ``residual`` on [lo, hi].

    Finishes with one secant step on the final bracket: the residual of
    a piecewise linear composition is linear there (away from its
    kinks), so the step lands within a few ulps of the root.  The
    secant value is kept only when it does not worsen the residual.
    """
    flo = residual(lo)
    if flo == 0.0:
        return lo
    fhi = residual(hi)
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("no sign change on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = residual(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    best = 0.5 * (lo + hi)
    if fhi != flo:
        sec = lo - flo * (hi - lo) / (fhi - flo)
        if lo <= sec <= hi and abs(residual(sec)) <= abs(residual(best)):
            best = sec
    return best


def _bisect_predicate(pred, lo: float, hi: float, tol: float, want_hi: bool) -> float:
    """Locate the boundary where ``pred`` flips between lo and hi.

    ``pred(hi)`` must hold if ``want_hi`` else ``pred(lo)`` must hold;
    returns a point within ``tol`` of the transition, on the true side.
    """
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid) == want_hi:
            hi = mid
        else:
            lo = mid
    return hi if want_hi else lo


def find_periodic_points(
    f: PiecewiseLinearMap,
    period: int,
    tol: float = 1e-12,
    grid_size: int = 4096,
    zero_tol: float = 1e-13,
    domain: tuple[float, float] = (0.0, 1.0),
    classify: bool = True,
) -> PeriodicScan:
    """Locate period-``period`` points of ``f`` on ``domain``.

    Scans the residual ``f^period(x) - x`` on a uniform grid: sign
    changes are refined by bisection to ``tol``; runs of two or more
    grid nodes with residual within ``zero_tol`` of zero are reported as
    plateaus (their edges refined by bisection on the zero-residual
    predicate); grid nodes that are themselves roots (including the
    domain endpoints) are kept as isolated roots.  Points whose least
    period properly divides ``period`` are discarded, using the
    threshold ``10 * tol``.  Surviving roots are grouped into orbits,
    each rotated to start at its least point.
    """
    if period < 1:
        raise ValueError("period must be positive")
    if tol <= 0 or zero_tol <= 0:
        raise ValueError("tolerances must be positive")
    if grid_size < 16:
        raise ValueError("grid too coarse")
    dlo, dhi = float(domain[0]), float(domain[1])
    if not (0.0 <= dlo < dhi <= 1.0):
        raise ValueError("domain must be a nondegenerate subinterval of [0, 1]")

    # Interior nodes are shifted off the uniform lattice: maps with
    # dyadic slopes send exact lattice points onto short cycles (every
    # multiple of 2**-m reaches 0 under the tent map within m steps), so
    # sampling the residual at k/N would silently miss its sign changes.
    spacing = (dhi - dlo) / grid_size
    xs = np.linspace(dlo, dhi, grid_size + 1)
    xs[1:-1] += spacing * 0.21372262754
    ys = xs.copy()
    for _ in range(period):
        ys = evaluate(f, ys)
    resid = ys - xs
    near = np.abs(resid) <= zero_tol

    def residual_at(x: float) -> float:
        return float(iterate(f, x, period)) - x

    def is_zero(x: float) -> bool:
        return abs(residual_at(x)) <= zero_tol

    # maximal runs of near-zero residual
    runs: list[tuple[int, int]] = []
    i = 0
    while i <= grid_size:
        if near[i]:
            j = i
            while j + 1 <= grid_size and near[j + 1]:
                j += 1
            runs.append((i, j))
            i = j + 1
        else:
            i += 1

    plateaus: list[Plateau] = []
    roots: list[float] = []
    edge_tol = min(tol, 1e-10)
    for i0, i1 in runs:
        if i1 - i0 >= 1:
            if i0 == 0:
                lo = xs[0]
            else:
                lo = _bisect_predicate(is_zero, xs[i0 - 1], xs[i0], edge_tol, want_hi=True)
            if i1 == grid_size:
                hi = xs[grid_size]
            else:
                hi = _bisect_predicate(is_zero, xs[i1], xs[i1 + 1], edge_tol, want_hi=False)
            plateaus.append(Plateau(period=period, lo=float(lo), hi=float(hi)))
        else:
            roots.append(float(xs[i0]))

    # isolated sign changes strictly between near-zero nodes
    for i in range(grid_size):
        if near[i] or near[i + 1]:
            continue
        if resid[i] * resid[i + 1] < 0:
            roots.append(_bisect_root(residual_at, float(xs[i]), float(xs[i + 1]), tol))

    # drop roots swallowed by a plateau, merge near-duplicates
    roots = [
        r
        for r in sorted(roots)
        if not any(lo - spacing <= r <= hi + spacing for lo, hi, *_ in
                   ((p.lo, p.hi) for p in plateaus))
    ]
    merged: list[float] = []
    for r in roots:
        if merged and r - merged[-1] < max(16 * tol, 1e-11):
            continue
        merged.append(r)

    # filter points whose least period properly divides the requested one
    divisor_tol = 10 * tol

    def has_smaller_period(x: float) -> bool:
        return any(
            abs(float(iterate(f, x, d)) - x) < divisor_tol
            for d in _proper_divisors(period)
        )

    kept = [r for r in merged if not has_smaller_period(r)]
    plateaus = [p for p in plateaus if not has_smaller_period(p.midpoint)]

    # group roots into orbits
    match_tol = 1e-8
    used = [False] * len(kept)
    orbits: list[PeriodicOrbit] = []
    for idx, r in enumerate(kept):
        if used[idx]:
            continue
        used[idx] = True
        pts = [r]
        y = r
        for _ in range(period - 1):
            y = float(evaluate(f, y))
            hit = None
            for jdx, s in enumerate(kept):
                if not used[jdx] and abs(s - y) <= match_tol:
                    hit = jdx
                    break
            if hit is not None:
                used[hit] = True
                y = kept[hit]
            pts.append(y)
        start = min(range(len(pts)), key=pts.__getitem__)
        cyc = tuple(pts[start:] + pts[:start])
        mult = orbit_multiplier(f, cyc)
        label = (
            classify_attractivity(f, cyc) if classify else "neutral"
        )
        orbits.append(
            PeriodicOrbit(
                period=period, points=cyc, label=label, multiplier=mult
            )
        )

    if classify:
        plateaus = [
            Plateau(
                period=p.period,
                lo=p.lo,
                hi=p.hi,
                label=classify_attractivity(f, (p.midpoint,) if period == 1 else _orbit_points(f, p.midpoint, period)),
            )
            for p in plateaus
        ]

    pts_sorted = sorted(x for o in orbits for x in o.points)
    warn = any(
        b - a < 4 * spacing for a, b in zip(pts_sorted, pts_sorted[1:])
    ) or len(pts_sorted) >= grid_size // 8
    return PeriodicScan(
        period=period,
        orbits=tuple(orbits),
        plateaus=tuple(plateaus),
        resolution_warning=warn,
        grid_size=grid_size,
        tol=tol,
    )


def _orbit_points(f: PiecewiseLinearMap, x: float, period: int) -> tuple[float, ...]:
    pts = [float(x)]
    for _ in range(period - 1):
        pts.append(float(evaluate(f, pts[-1])))
    return tuple(pts)


def classify_attractivity(
    f: PiecewiseLinearMap,
    orbit: Union[PeriodicOrbit, Plateau, Sequence[float], float],
    probe_radius: float = 1e-3,
    probe_steps: int = 200,
) -> str:
    """Label an orbit attractive, repelling, neutral, or inconclusive.

    The label follows the orbit-convergence definition: sample points on
    both sides of the orbit within ``probe_radius``, apply the
    period-fold composition ``probe_steps`` times, and call the orbit
    attractive when every sample converges to it and repelling when
    every sample leaves the probe neighborhood.  The finite-difference
    multiplier serves as a cross-check: whenever it lies within
    ``NEUTRAL_BAND`` of modulus one the label is neutral outright, and
    a sample verdict contradicting the multiplier's modulus yields
    "inconclusive".
    """
    if isinstance(orbit, PeriodicOrbit):
        points: Sequence[float] = orbit.points
    elif isinstance(orbit, Plateau):
        points = _orbit_points(f, orbit.midpoint, orbit.period)
    elif isinstance(orbit, (int, float)):
        points = (float(orbit),)
    else:
        points = tuple(float(p) for p in orbit)
    if not points:
        raise ValueError("empty orbit")
    if probe_radius <= 0 or probe_steps < 1:
        raise ValueError("probe radius and steps must be positive")

    period = len(points)
    mult = orbit_multiplier(f, points)
    if abs(abs(mult) - 1.0) <= NEUTRAL_BAND:
        return "neutral"

    base = points[0]
    conv_tol = max(1e-12, probe_radius * 1e-3)
    offsets = (
        probe_radius,
        -probe_radius,
        probe_radius / 2,
        -probe_radius / 2,
        probe_radius / 4,
        -probe_radius / 4,
    )
    samples = []
    for off in offsets:
        s = min(max(base + off, 0.0), 1.0)
        if s != base:
            samples.append(s)
    verdicts = []
    for s in samples:
        y = s
        verdict = "neutral"
        for _ in range(probe_steps):
            y = float(iterate(f, y, period))
            d = abs(y - base)
            if d > probe_radius:
                verdict = "left"
                break
            if d < conv_tol:
                verdict = "converged"
                break
        verdicts.append(verdict)
    if all(v == "converged" for v in verdicts):
        label = "attractive"
    elif all(v == "left" for v in verdicts):
        label = "repelling"
    else:
        label = "neutral"

    if label == "attractive" and abs(mult) > 1 + NEUTRAL_BAND:
        return "inconclusive"
    if label == "repelling" and abs(mult) < 1 - NEUTRAL_BAND:
        return "inconclusive"
    return label


# ---------------------------------------------------------------------------
# orbit-tail decomposition


def _cluster_decomposition(
    g: PiecewiseLinearMap,
    orbit: np.ndarray,
    level: int,
    tol: float,
    transient: int,
    x0: float,
) -> IntervalDecomposition:
    m = 1 << level
    orbit_len = len(orbit) - 1
    tail_idx = np.arange(transient, orbit_len)
    raw_hulls: list[tuple[float, float]] = []
    raw_idx: list[np.ndarray] = []
    for r in range(m):
        idx = tail_idx[(tail_idx % m) == r]
        if idx.size == 0:
            raise DecompositionError(
                "empty cluster: orbit too short for this level",
                {"level": level, "orbit_len": orbit_len, "transient": transient},
            )
        pts = orbit[idx]
        raw_hulls.append((float(pts.min()), float(pts.max())))
        raw_idx.append(idx)

    order = sorted(range(m), key=lambda r: raw_hulls[r][0])
    margin = float("inf")
    for a, b in zip(order, order[1:]):
        margin = min(margin, raw_hulls[b][0] - raw_hulls[a][1])
    if m > 1 and margin <= 0:
        raise DecompositionError(
            "portion hulls overlap: the tail does not split at this level",
            {
                "level": level,
                "hulls": [list(raw_hulls[r]) for r in order],
                "margin": margin,
                "orbit_len": orbit_len,
                "transient": transient,
                "x0": x0,
            },
        )

    # anchor the labeling so index 0 is the leftmost hull, then follow
    # the dynamics: residue r's image lands in residue r + 1
    r0 = min(range(m), key=lambda r: raw_hulls[r][0])
    hulls = tuple(raw_hulls[(r0 + j) % m] for j in range(m))
    sizes = tuple(int(raw_idx[(r0 + j) % m].size) for j in range(m))

    defect = 0.0
    for j in range(m):
        idx = raw_idx[(r0 + j) % m]
        images = orbit[idx + 1]
        slo, shi = hulls[(j + 1) % m]
        defect = max(defect, slo - float(images.min()), float(images.max()) - shi)
    defect = max(defect, 0.0)
    if defect > tol:
        raise DecompositionError(
            "portion images escape the successor hull",
            {
                "level": level,
                "hulls": [list(h) for h in hulls],
                "invariance_defect": defect,
                "tol": tol,
                "orbit_len": orbit_len,
                "transient": transient,
                "x0": x0,
            },
        )

    return IntervalDecomposition(
        level=level,
        hulls=hulls,
        margin=margin,
        invariance_defect=defect,
        tol=tol,
        orbit_len=orbit_len,
        transient=transient,
        x0=x0,
        cluster_sizes=sizes,
    )


_GENERIC_START = float(np.sqrt(2) / 2)


def _decomposition_orbit(
    g: PiecewiseLinearMap,
    level: int,
    orbit_len: int,
    transient: int | None,
    x0: float | None,
) -> tuple[np.ndarray, int, float]:
    if level < 0:
        raise ValueError("level must be nonnegative")
    m = 1 << level
    if orbit_len < 100 * m:
        raise ValueError("orbit too short: need at least 100 points per portion")
    start = _GENERIC_START if x0 is None else float(x0)
    if not 0.0 <= start <= 1.0:
        raise ValueError("starting point must lie in [0, 1]")
    cut = orbit_len // 10 if transient is None else int(transient)
    if not 0 <= cut < orbit_len:
        raise ValueError("transient must lie within the orbit")
    return _orbit(g, start, orbit_len), cut, start


def decompose_omega(
    g: PiecewiseLinearMap,
    level: int,
    orbit_len: int = 1_000_000,
    tol: float = 1e-3,
    transient: int | None = None,
    x0: float | None = None,
) -> IntervalDecomposition:
    """Split an orbit tail into 2**level cyclically permuted portions.

    Iterates a generic point for ``orbit_len`` steps, discards the first
    ``transient`` states (a tenth of the orbit by default), and clusters
    the tail by step index modulo 2**level.  Returns the portions'
    convex hulls in dynamical order anchored at the leftmost hull.
    Raises :class:`DecompositionError` when the hulls overlap (the map
    has no such splitting at this level, or the orbit is too short) or
    when the observed portion points' images escape the tol-inflated
    successor hull.

    The invariance check applies to the sampled portion points, not to
    every point of the hull interval: the hulls of a genuine splitting
    may legitimately contain folding points of the map, so containment
    of the hull's full image is not implied by the underlying
    portion-to-portion dynamics.
    """
    orbit, cut, start = _decomposition_orbit(g, level, orbit_len, transient, x0)
    return _cluster_decomposition(g, orbit, level, tol, cut, start)


def decompose_tree(
    g: PiecewiseLinearMap,
    max_level: int,
    orbit_len: int = 1_000_000,
    tol: float = 1e-3,
    transient: int | None = None,
    x0: float | None = None,
) -> DecompositionTree:
    """Decompositions at every level 0..max_level over one shared orbit.

    Verifies that each level-k hull nests inside exactly one level-(k-1)
    hull and records that parent relation.
    """
    orbit, cut, start = _decomposition_orbit(g, max_level, orbit_len, transient, x0)
    levels = tuple(
        _cluster_decomposition(g, orbit, k, tol, cut, start)
        for k in range(max_level + 1)
    )
    parents: list[tuple[int, ...]] = [()]
    for k in range(1, max_level + 1):
        row = []
        for j, (lo, hi) in enumerate(levels[k].hulls):
            parent = None
            for pj, (plo, phi) in enumerate(levels[k - 1].hulls):
                if plo <= lo and hi <= phi:
                    parent = pj
                    break
            if parent is None:
                raise DecompositionError(
                    "hull not nested in any parent hull",
                    {"level": k, "hull": [lo, hi],
                     "parent_hulls": [list(h) for h in levels[k - 1].hulls]},
                )
            row.append(parent)
        parents.append(tuple(row))
    return DecompositionTree(levels=levels, parents=tuple(parents))


# ---------------------------------------------------------------------------
# shadowing


def _expand_candidates(
    f: PiecewiseLinearMap,
    candidates: Iterable[Union[PeriodicOrbit, Plateau, float]],
) -> list[tuple[int, PeriodicOrbit]]:
    """Flatten candidates to (original index, orbit) pairs."""
    out: list[tuple[int, PeriodicOrbit]] = []
    for i, c in enumerate(candidates):
        if isinstance(c, PeriodicOrbit):
            out.append((i, c))
        elif isinstance(c, Plateau):
            out.extend((i, rep) for rep in c.representatives(f))
        elif isinstance(c, (int, float)):
            p = float(c)
            if abs(float(evaluate(f, p)) - p) > 1e-6:
                raise ValueError(
                    f"candidate {p!r} is not a fixed point; pass a PeriodicOrbit"
                )
            out.append(
                (i, PeriodicOrbit(
                    period=1,
                    points=(p,),
                    label="neutral",
                    multiplier=orbit_multiplier(f, (p,)),
                    isolated=True,
                ))
            )
        else:
            raise TypeError(f"unsupported candidate type: {type(c).__name__}")
    if not out:
        raise ValueError("no candidates given")
    return out


def _window_slice(window: tuple[int, int], n_states: int) -> tuple[int, int]:
    start, stop = int(window[0]), int(window[1])
    if not 0 <= start <= stop < n_states:
        raise ValueError("window must lie within the trajectory")
    return start, stop


def shadow_test(
    traj,
    f: PiecewiseLinearMap,
    candidates: Iterable[Union[PeriodicOrbit, Plateau, float]],
    eps: float,
    window: tuple[int, int],
) -> ShadowResult:
    """Check whether a periodic itinerary eps-shadows the trajectory.

    For each candidate orbit and each phase, the reference itinerary at
    step ``n`` is the orbit point of index ``(n + phase) mod period``.
    The test passes when some candidate and phase keep the sup distance
    over the inclusive window below ``eps``; the result reports the
    minimizing combination.  Plateau candidates contribute orbits
    through their endpoints and midpoint; bare floats are accepted for
    fixed points.
    """
    states = np.asarray(getattr(traj, "states", traj), dtype=float)
    if states.ndim != 1:
        raise ValueError("expected a single trajectory")
    if eps <= 0:
        raise ValueError("eps must be positive")
    start, stop = _window_slice(window, states.size)
    seg = states[start : stop + 1]
    steps = np.arange(start, stop + 1)

    best: tuple[float, int, int, PeriodicOrbit] | None = None
    for orig, orbit in _expand_candidates(f, candidates):
        pts = np.asarray(orbit.points)
        for phase in range(orbit.period):
            ref = pts[(steps + phase) % orbit.period]
            sup = float(np.abs(seg - ref).max())
            if best is None or sup < best[0]:
                best = (sup, orig, phase, orbit)
    sup, orig, phase, orbit = best
    return ShadowResult(
        passed=sup < eps,
        sup_error=sup,
        candidate_index=orig,
        phase=phase,
        orbit=orbit,
        eps=eps,
        window=(start, stop),
    )


def shadow_fraction(
    batch,
    f: PiecewiseLinearMap,
    candidates: Iterable[Union[PeriodicOrbit, Plateau, float]],
    eps: float,
    window: tuple[int, int],
) -> ShadowSummary:
    """Fraction of a trajectory batch shadowed by some candidate orbit.

    ``batch`` may be a TrajectoryBatch or a 2-D array of states, one
    trajectory per row.  Counts, per candidate of the caller's list, the
    passing trajectories whose best match came from that candidate.
    """
    states = np.asarray(getattr(batch, "states", batch), dtype=float)
    if states.ndim != 2:
        raise ValueError("expected a batch of trajectories")
    if eps <= 0:
        raise ValueError("eps must be positive")
    start, stop = _window_slice(window, states.shape[1])
    seg = states[:, start : stop + 1]
    steps = np.arange(start, stop + 1)

    expanded = _expand_candidates(f, candidates)
    n_orig = max(orig for orig, _ in expanded) + 1
    sups = []
    origins = []
    for orig, orbit in expanded:
        pts = np.asarray(orbit.points)
        for phase in range(orbit.period):
            ref = pts[(steps + phase) % orbit.period]
            sups.append(np.abs(seg - ref[None, :]).max(axis=1))
            origins.append(orig)
    sup_matrix = np.stack(sups)
    best_rows = sup_matrix.argmin(axis=0)
    best_sup = sup_matrix[best_rows, np.arange(states.shape[0])]
    passed = best_sup < eps
    counts = [0] * n_orig
    for row, ok in zip(best_rows, passed):
        if ok:
            counts[origins[row]] += 1
    return ShadowSummary(
        n_trajectories=states.shape[0],
        n_passed=int(passed.sum()),
        by_candidate=tuple(counts),
        eps=eps,
        window=(start, stop),
    )


def shadow_candidates(
    f: PiecewiseLinearMap, max_period: int = 16
) -> tuple[Union[PeriodicOrbit, Plateau], ...]:
    """Default shadowing candidates: orbits of every period up to the cap,
    plus plateaus (which contribute representatives when expanded)."""
    out: list[Union[PeriodicOrbit, Plateau]] = []
    for n in range(1, max_period + 1):
        scan = find_periodic_points(f, n)
        out.extend(scan.orbits)
        out.extend(scan.plateaus)
    return tuple(out)


# ---------------------------------------------------------------------------
# Li-Yorke pair scan


def liyorke_scan(
    system: Union[PiecewiseLinearMap, MapSequence],
    n_pairs: int,
    horizon: int,
    closeness: float,
    separation: float,
    burn_in: int = 20,
    master_seed: int = 0,
) -> LiYorkeReport:
    """Scan random pairs for simultaneous approach and separation.

    Draws ``n_pairs`` pairs of uniform starting points, evolves both
    orbits under ``system`` (a single map or a map sequence applied from
    index 0), and records the min and max of the pairwise distance over
    steps ``burn_in + 1 .. horizon``.  A pair is flagged when its
    minimum drops below ``closeness`` while its maximum exceeds
    ``separation``.

    The default ``burn_in`` of 20 skips the opening steps: expanding
    maps with dyadic slopes lose one bit of state per step in double
    precision, so their orbits pass through a transient pseudo-chaotic
    stretch before collapsing onto a short cycle, while contracting maps
    need a few steps before their pair distances become representative.
    Opening the window after a short burn-in keeps both effects out of
    the recorded extremes.
    """
    if horizon < 100:
        raise ValueError("horizon must be at least 100")
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    if not 0 <= burn_in < horizon:
        raise ValueError("burn-in must lie within the horizon")
    if closeness <= 0 or separation <= 0:
        raise ValueError("thresholds must be positive")
    if isinstance(system, PiecewiseLinearMap):
        def map_at(n: int) -> PiecewiseLinearMap:
            return system
    elif isinstance(system, MapSequence):
        map_at = system.map_at
    else:
        raise TypeError("system must be a map or a map sequence")

    stream = noise_stream(master_seed, 0)
    x = stream.random(n_pairs)
    y = stream.random(n_pairs)
    x0 = x.copy()
    y0 = y.copy()
    dmin = np.full(n_pairs, np.inf)
    dmax = np.zeros(n_pairs)
    for n in range(horizon):
        f_n = map_at(n)
        x = evaluate(f_n, x)
        y = evaluate(f_n, y)
        if n + 1 > burn_in:
            d = np.abs(x - y)
            np.minimum(dmin, d, out=dmin)
            np.maximum(dmax, d, out=dmax)
    flag = (dmin < closeness) & (dmax > separation)
    flagged = tuple(
        LiYorkePair(
            x0=float(x0[i]),
            y0=float(y0[i]),
            min_distance=float(dmin[i]),
            max_distance=float(dmax[i]),
        )
        for i in np.flatnonzero(flag)
    )
    return LiYorkeReport(
        n_pairs=n_pairs,
        horizon=horizon,
        burn_in=burn_in,
        closeness=closeness,
        separation=separation,
        flagged=flagged,
        master_seed=master_seed,
    )
