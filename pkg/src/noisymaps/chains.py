"""Finite delta-chain search on a uniform grid.

A delta'-chain for a map f is a finite sequence z_0, z_1, ... with
|f(z_i) - z_{i+1}| < delta' at every link.  Reachability is decided by
breadth-first search over grid nodes i/n with the stricter edge rule
|f(a) - b| < delta' - h, h being the grid spacing.  The margin h certifies
that the discrete chain stays a strict delta'-chain even after perturbing
each interior node by up to h, so grid conclusions transfer to nearby
continuous chains.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .maps import PiecewiseLinearMap, evaluate
from .stochproc import noise_stream

__all__ = [
    "Ball",
    "ReachabilityGrid",
    "DeltaChain",
    "ChainSearchResult",
    "find_delta_chain",
    "validate_chain",
    "corridor_probability",
    "CorridorEstimate",
    "monte_carlo_corridor",
]


@dataclass(frozen=True)
class Ball:
    """Open ball B(center, radius) on the line."""

    center: float
    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")
        if not math.isfinite(self.center):
            raise ValueError("center must be finite")

    def contains(self, x) -> bool:
        return bool(abs(x - self.center) < self.radius)


@dataclass(frozen=True)
class ReachabilityGrid:
    """Uniform grid 0, 1/n, 2/n, ..., 1 over the unit interval."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("need at least one cell")

    @classmethod
    def with_spacing(cls, h: float) -> "ReachabilityGrid":
        """Finest grid of the form i/n with spacing at most h."""
        if not (0.0 < h <= 1.0):
            raise ValueError("spacing must be in (0, 1]")
        return cls(n_cells=int(math.ceil(1.0 / h)))

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) / self.n_cells


@dataclass(frozen=True)
class DeltaChain:
    """A validated chain; max_link_error < delta_prime holds by construction."""

    points: tuple
    delta_prime: float
    max_link_error: float

    def __len__(self):
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "delta_prime": self.delta_prime,
            "max_link_error": self.max_link_error,
        }


@dataclass(frozen=True)
class ChainSearchResult:
    """Outcome of a grid search.

    ``chain`` is None when the target ball is unreachable; ``reachable``
    always lists every grid node reachable from the start through at least
    one link (the start itself is not included unless some chain returns
    to it).
    """

    chain: Optional[DeltaChain]
    reachable: np.ndarray
    grid: ReachabilityGrid
    start: float
    target: Ball
    delta_prime: float

    @property
    def found(self) -> bool:
        return self.chain is not None

    def reachable_closure(self) -> Optional[tuple]:
        if self.reachable.size == 0:
            return None
        return (float(self.reachable.min()), float(self.reachable.max()))

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "chain": self.chain.to_dict() if self.chain else None,
            "start": self.start,
            "target": {"center": self.target.center, "radius": self.target.radius},
            "delta_prime": self.delta_prime,
            "grid_cells": self.grid.n_cells,
            "n_reachable": int(self.reachable.size),
            "reachable_closure": list(self.reachable_closure() or ()),
        }


def _neighbor_range(y: float, margin: float, n: int):
    """Indices i with |y - i/n| < margin, clipped to [0, n]."""
    lo = max(0, int(math.ceil((y - margin) * n)))
    hi = min(n, int(math.floor((y + margin) * n)))
    return lo, hi


def find_delta_chain(
    f: PiecewiseLinearMap,
    start: float,
    target: Ball,
    delta_prime: float,
    h: Optional[float] = None,
) -> ChainSearchResult:
    """Search for a delta'-chain from ``start`` into ``target``.

    The first chain point is the exact start; all later points are grid
    nodes.  Edges obey |f(a) - b| < delta' - h, so every returned chain
    passes validate_chain with slack at least h.  The search always
    explores the full reachable set; the reported chain is the first
    shortest one in increasing-node order.
    """
    if not (delta_prime > 0.0):
        raise ValueError("delta_prime must be > 0")
    if h is None:
        h = delta_prime / 8.0
    grid = ReachabilityGrid.with_spacing(h)
    spacing = grid.spacing
    if not (spacing < delta_prime / 2.0):
        raise ValueError(
            f"grid spacing {spacing} must be below delta_prime/2 = {delta_prime / 2}"
        )
    margin = delta_prime - spacing
    n = grid.n_cells
    nodes = grid.nodes

    parent = np.full(n + 1, -2, dtype=np.int64)  # -2 unvisited, -1 start
    queue = deque()

    def push_neighbors(y: float, parent_idx: int):
        lo, hi = _neighbor_range(y, margin, n)
        for i in range(lo, hi + 1):
            if parent[i] == -2 and abs(y - nodes[i]) < margin:
                parent[i] = parent_idx
                queue.append(i)

    push_neighbors(evaluate(f, start), -1)
    goal = -1
    while queue:
        cur = queue.popleft()
        if goal < 0 and abs(nodes[cur] - target.center) < target.radius:
            goal = cur
            # keep exploring so `reachable` is the full closure
        push_neighbors(evaluate(f, float(nodes[cur])), cur)

    reachable = nodes[parent > -2]
    chain = None
    if goal >= 0:
        idx_path = []
        cur = goal
        while cur != -1:
            idx_path.append(cur)
            cur = int(parent[cur])
        points = (float(start),) + tuple(float(nodes[i]) for i in reversed(idx_path))
        ok, err = validate_chain(f, points, delta_prime)
        if not ok:  # cannot happen: the edge rule is stricter
            raise AssertionError("grid chain failed validation")
        chain = DeltaChain(points=points, delta_prime=delta_prime, max_link_error=err)
    return ChainSearchResult(
        chain=chain, reachable=reachable, grid=grid,
        start=float(start), target=target, delta_prime=delta_prime,
    )


def validate_chain(f: PiecewiseLinearMap, points, delta_prime: float):
    """Check the strict link inequality; returns (ok, max_link_error)."""
    pts = list(points)
    if len(pts) < 1:
        raise ValueError("a chain needs at least one point")
    worst = 0.0
    for a, b in zip(pts, pts[1:]):
        err = abs(evaluate(f, a) - b)
        worst = max(worst, err)
    return worst < delta_prime, worst


def corridor_probability(window_halfwidth: float, delta: float, n_steps: int) -> float:
    """Probability that n_steps consecutive perturbations all land in a
    centered subinterval of half-width w: (w/delta)^n_steps."""
    if not (delta > 0.0):
        raise ValueError("delta must be > 0")
    if not (0.0 < window_halfwidth <= delta):
        raise ValueError("window half-width must lie in (0, delta]")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    return (window_halfwidth / delta) ** n_steps


@dataclass(frozen=True)
class CorridorEstimate:
    analytic: float
    estimate: float
    stderr: float
    trials: int

    def to_dict(self) -> dict:
        return {
            "analytic": self.analytic,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "trials": self.trials,
        }


def monte_carlo_corridor(
    window_halfwidth: float,
    delta: float,
    n_steps: int,
    trials: int,
    master_seed: int = 0,
) -> CorridorEstimate:
    """Monte Carlo cross-check of corridor_probability.

    Draws trials x n_steps perturbations and counts the runs whose draws
    all satisfy |xi| <= w.  The standard error uses the analytic p, so a
    three-sigma comparison needs no estimate plug-in.
    """
    p = corridor_probability(window_halfwidth, delta, n_steps)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gen = noise_stream(master_seed, 0)
    hits = 0
    chunk = max(1, min(trials, 2_000_000 // max(1, n_steps)))
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        u = gen.random((m, n_steps))
        xi = 2.0 * delta * u - delta
        hits += int((np.abs(xi) <= window_halfwidth).all(axis=1).sum())
        done += m
    est = hits / trials
    stderr = math.sqrt(p * (1.0 - p) / trials)
    return CorridorEstimate(analytic=p, estimate=est, stderr=stderr, trials=trials)
