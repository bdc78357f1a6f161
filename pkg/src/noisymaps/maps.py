"""Piecewise linear interval maps and map sequences.

A map is given by its breakpoints and the values taken there, with linear
interpolation in between.  Breakpoints are strictly increasing and span
exactly [0, 1]; values stay in [0, 1].  Evaluation outside [0, 1] clamps the
argument to the nearest endpoint first, so every map extends to the whole
real line with values on the boundary of its range.

A map sequence is a family (f_n) indexed by n = 0, 1, 2, ... together with
its uniform limit.  Sequences are the driving data for nonautonomous
processes; ``tail_shift`` rebases the index so analyses can start at any k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "PiecewiseLinearMap",
    "MapSequence",
    "evaluate",
    "iterate",
    "compose_prefix",
    "sup_distance",
    "tail_shift",
]

SEQUENCE_KINDS = ("constant", "shrinking-spike", "decaying-shift", "custom")


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Continuous piecewise linear map of [0, 1] into itself.

    Parameters
    ----------
    breakpoints : tuple of float
        Strictly increasing abscissae; the first must be 0.0 and the last 1.0.
    values : tuple of float
        Map values at the breakpoints, each in [0, 1].
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) != len(vals):
            raise ValueError(
                f"breakpoints and values differ in length: {len(bp)} != {len(vals)}"
            )
        if len(bp) < 2:
            raise ValueError("need at least two breakpoints")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError(f"breakpoints must span [0, 1], got [{bp[0]}, {bp[-1]}]")
        for a, b in zip(bp, bp[1:]):
            if not a < b:
                raise ValueError(f"breakpoints not strictly increasing at {a!r}")
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"value {v!r} outside [0, 1]")
        if any(np.isnan(bp)) or any(np.isnan(vals)):
            raise ValueError("NaN in breakpoints or values")
        object.__setattr__(self, "_bp", np.asarray(bp))
        object.__setattr__(self, "_vals", np.asarray(vals))

    @property
    def knots(self):
        """Breakpoints and values as a pair of numpy arrays (read only)."""
        return self._bp, self._vals

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(f: PiecewiseLinearMap, x):
    """Evaluate f at x, clamping the argument into [0, 1] first.

    Accepts a scalar or an ndarray; the return type follows the input.  The
    scalar and array paths share one interpolation kernel, so a value
    computed elementwise in a batch is bit-identical to the scalar result.
    """
    bp, vals = f.knots
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(np.interp(x, bp, vals))
    return np.interp(x, bp, vals)


def iterate(f: PiecewiseLinearMap, x, n: int):
    """n-fold composition f(f(...f(x)...)); n = 0 returns x unchanged.

    Works on scalars and arrays alike.  Compositions are evaluated step by
    step; no closed form of the iterated map is built.
    """
    if n < 0:
        raise ValueError("iteration count must be >= 0")
    y = x
    for _ in range(n):
        y = evaluate(f, y)
    return y


@dataclass(frozen=True)
class MapSequence:
    """Sequence of piecewise linear maps with a designated uniform limit.

    ``generator(n)`` returns the n-th map (n >= 0).  ``kind`` is a coarse
    tag used by reports: one of "constant", "shrinking-spike",
    "decaying-shift" or "custom".
    """

    generator: Callable[[int], PiecewiseLinearMap]
    limit: PiecewiseLinearMap
    kind: str = "custom"

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")

    def map_at(self, n: int) -> PiecewiseLinearMap:
        if n < 0:
            raise ValueError("sequence index must be >= 0")
        f = self.generator(n)
        if not isinstance(f, PiecewiseLinearMap):
            raise TypeError("generator must produce PiecewiseLinearMap")
        return f


def compose_prefix(seq: MapSequence, k: int, j: int, x):
    """Apply the first j maps of the tail starting at index k.

    Returns f_{k+j-1}( ... f_{k+1}(f_k(x)) ... ); j = 0 returns x unchanged.
    """
    if j < 0:
        raise ValueError("composition length must be >= 0")
    y = x
    for i in range(j):
        y = evaluate(seq.map_at(k + i), y)
    return y


def sup_distance(a: PiecewiseLinearMap, b: PiecewiseLinearMap) -> float:
    """Exact sup norm of a - b over [0, 1].

    The difference of two piecewise linear maps is piecewise linear on the
    union of their breakpoints, so its absolute maximum is attained at a
    union breakpoint.  No grid approximation is involved.
    """
    grid = np.union1d(a.knots[0], b.knots[0])
    diff = np.abs(evaluate(a, grid) - evaluate(b, grid))
    return float(diff.max())


def tail_shift(seq: MapSequence, k: int) -> MapSequence:
    """Sequence whose n-th map is the (n + k)-th map of ``seq``."""
    if k < 0:
        raise ValueError("shift must be >= 0")
    if k == 0:
        return seq
    gen = seq.generator
    return MapSequence(
        generator=lambda n: gen(n + k), limit=seq.limit, kind=seq.kind
    )
