"""Empirical recurrence, trapping and region-entry probes.

The central quantity is the fraction of noisy trajectories that keep
returning to a neighbourhood U of their starting point: a trajectory
qualifies when it visits U at least ``min_visits`` times after a burn-in,
within a fixed horizon.  Driving the noise half-width delta' through a
small grid gives an empirical stand-in for the almost-sure recurrence that
uniform limits of chain-mixing sequences exhibit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .maps import MapSequence
from .stochproc import ProcessConfig, simulate_batch

__all__ = [
    "Region",
    "RecurrenceQuery",
    "DeltaEstimate",
    "RecurrenceReport",
    "TrapReport",
    "EscapeEstimate",
    "estimate_recurrence",
    "detect_trap",
    "escape_probability",
]

DEFAULT_DELTA_FRACTIONS = (0.25, 0.5, 0.9)


@dataclass(frozen=True)
class Region:
    """Finite union of closed intervals on the real line."""

    intervals: tuple

    def __post_init__(self):
        ivs = []
        for lo, hi in self.intervals:
            lo, hi = float(lo), float(hi)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad interval [{lo}, {hi}]")
            ivs.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(ivs))
        if not ivs:
            raise ValueError("region needs at least one interval")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Region":
        return cls(((lo, hi),))

    @classmethod
    def union(cls, pairs) -> "Region":
        return cls(tuple(pairs))

    def contains(self, x):
        """Vectorized membership test (closed intervals)."""
        x = np.asarray(x)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (x >= lo) & (x <= hi)
        return inside


@dataclass(frozen=True)
class RecurrenceQuery:
    """Neighbourhood-return query around a point.

    The process starts at ``center``; a visit is a state strictly inside
    the open ball B(center, radius).  A trajectory qualifies when it
    records at least ``min_visits`` visits at steps in (burn_in, horizon].
    ``deltas`` lists the noise half-widths delta' to sweep; if omitted the
    grid radius * {0.25, 0.5, 0.9} is used.
    """

    center: float
    radius: float
    min_visits: int
    horizon: int
    burn_in: Optional[int] = None
    deltas: Optional[tuple] = None
    trials: int = 10_000

    def __post_init__(self):
        if not (self.radius > 0.0):
            raise ValueError("radius must be > 0")
        if self.min_visits < 1:
            raise ValueError("min_visits must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        burn = self.horizon // 10 if self.burn_in is None else self.burn_in
        if not (0 <= burn < self.horizon):
            raise ValueError("burn_in must satisfy 0 <= burn_in < horizon")
        object.__setattr__(self, "burn_in", int(burn))
        ds = self.deltas
        if ds is None:
            ds = tuple(self.radius * f for f in DEFAULT_DELTA_FRACTIONS)
        ds = tuple(float(d) for d in ds)
        if any(d <= 0.0 for d in ds):
            raise ValueError("every delta' must be > 0")
        object.__setattr__(self, "deltas", ds)
        if self.min_visits > self.horizon - self.burn_in:
            raise ValueError("min_visits exceeds the post burn-in window")


@dataclass(frozen=True)
class DeltaEstimate:
    """Recurrence estimate for a single noise half-width."""

    delta_prime: float
    estimate: float
    stderr: float
    trials: int
    visit_histogram: dict
    first_hit: dict
    return_gap: dict

    def qualify_fraction(self, min_visits: int) -> float:
        """Fraction of trajectories with at least ``min_visits`` visits."""
        n = sum(c for v, c in self.visit_histogram.items() if v >= min_visits)
        return n / self.trials

    def to_dict(self) -> dict:
        return {
            "delta_prime": self.delta_prime,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "trials": self.trials,
            "visit_histogram": {str(k): v for k, v in sorted(self.visit_histogram.items())},
            "first_hit": self.first_hit,
            "return_gap": self.return_gap,
        }


@dataclass(frozen=True)
class RecurrenceReport:
    query: RecurrenceQuery
    master_seed: int
    results: tuple

    def to_dict(self) -> dict:
        q = self.query
        return {
            "query": {
                "center": q.center,
                "radius": q.radius,
                "min_visits": q.min_visits,
                "burn_in": q.burn_in,
                "horizon": q.horizon,
                "trials": q.trials,
                "deltas": list(q.deltas),
            },
            "master_seed": self.master_seed,
            "results": [r.to_dict() for r in self.results],
        }


def _summary(values: np.ndarray) -> dict:
    if values.size == 0:
        return {"count": 0}
    return {
        "count": int(values.size),
        "mean": float(values.mean()),
        "min": int(values.min()),
        "max": int(values.max()),
    }


def estimate_recurrence(
    seq: MapSequence, k: int, query: RecurrenceQuery, master_seed: int = 0
) -> RecurrenceReport:
    """Sweep the delta' grid and estimate the qualifying fraction.

    The process starts exactly at the ball center.  All delta' values share
    the same seed, so their underlying uniform draws coincide; estimates
    remain valid per delta' and the whole report is reproducible from
    (sequence, k, query, master_seed).
    """
    results = []
    for delta_prime in query.deltas:
        cfg = ProcessConfig(
            sequence=seq,
            x0=query.center,
            delta=delta_prime,
            horizon=query.horizon,
            tail_index=k,
            master_seed=master_seed,
        )
        batch = simulate_batch(cfg, query.trials)
        near = np.abs(batch.states - query.center) < query.radius
        window = near[:, query.burn_in + 1 :]
        counts = window.sum(axis=1)
        qualified = counts >= query.min_visits
        p = float(qualified.mean())
        stderr = math.sqrt(p * (1.0 - p) / query.trials)

        hist_counts = np.bincount(counts)
        histogram = {int(v): int(c) for v, c in enumerate(hist_counts) if c > 0}
        # structural sanity: the qualifying fraction is a tail sum of the
        # histogram, hence non-increasing in the visit requirement
        tails = np.cumsum(hist_counts[::-1])[::-1]
        assert np.all(np.diff(tails) <= 0)

        hits = near[:, 1:]
        ever = hits.any(axis=1)
        first = hits.argmax(axis=1)[ever] + 1
        first_hit = _summary(first)
        first_hit["never"] = int((~ever).sum())

        gaps = []
        rows = np.nonzero(window.any(axis=1))[0]
        for row in rows:
            idx = np.nonzero(window[row])[0]
            if idx.size > 1:
                gaps.append(np.diff(idx))
        gap_arr = np.concatenate(gaps) if gaps else np.array([], dtype=int)
        results.append(
            DeltaEstimate(
                delta_prime=float(delta_prime),
                estimate=p,
                stderr=stderr,
                trials=query.trials,
                visit_histogram=histogram,
                first_hit=first_hit,
                return_gap=_summary(gap_arr),
            )
        )
    return RecurrenceReport(query=query, master_seed=master_seed, results=tuple(results))


@dataclass(frozen=True)
class TrapReport:
    """Per-trajectory region entry bookkeeping.

    ``first_entry[i]`` is the first step at which trajectory i lies in the
    region (-1 when it never does); ``exited_after_entry[i]`` says whether
    it left the region at any later step.  ``trap`` holds when no entered
    trajectory ever exits.
    """

    region: Region
    first_entry: np.ndarray
    exited_after_entry: np.ndarray
    trials: int

    @property
    def n_entered(self) -> int:
        return int((self.first_entry >= 0).sum())

    @property
    def trap(self) -> bool:
        return not bool(self.exited_after_entry.any())

    def to_dict(self) -> dict:
        return {
            "region": [list(iv) for iv in self.region.intervals],
            "trials": self.trials,
            "n_entered": self.n_entered,
            "n_exited_after_entry": int(self.exited_after_entry.sum()),
            "trap": self.trap,
            "mean_first_entry": float(self.first_entry[self.first_entry >= 0].mean())
            if self.n_entered
            else None,
        }


def detect_trap(
    seq: MapSequence,
    k: int,
    x0: float,
    delta: float,
    horizon: int,
    trials: int,
    region: Region,
    master_seed: int = 0,
) -> TrapReport:
    """Check empirically that the region absorbs: once in, never out."""
    cfg = ProcessConfig(
        sequence=seq, x0=x0, delta=delta, horizon=horizon,
        tail_index=k, master_seed=master_seed,
    )
    batch = simulate_batch(cfg, trials)
    inside = region.contains(batch.states)
    ever = inside.any(axis=1)
    first_entry = np.where(ever, inside.argmax(axis=1), -1)
    entered_so_far = np.maximum.accumulate(inside, axis=1)
    exited = (entered_so_far & ~inside).any(axis=1)
    return TrapReport(
        region=region,
        first_entry=first_entry,
        exited_after_entry=exited,
        trials=trials,
    )


@dataclass(frozen=True)
class EscapeEstimate:
    estimate: float
    stderr: float
    trials: int
    within_steps: int

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "trials": self.trials,
            "within_steps": self.within_steps,
        }


def escape_probability(
    seq: MapSequence,
    k: int,
    x0: float,
    delta: float,
    region: Region,
    within_steps: int,
    trials: int,
    master_seed: int = 0,
) -> EscapeEstimate:
    """Fraction of trajectories entering the region by step ``within_steps``.

    Step 0 counts: if x0 already lies in the region the estimate is 1.0.
    """
    if within_steps < 0:
        raise ValueError("within_steps must be >= 0")
    cfg = ProcessConfig(
        sequence=seq, x0=x0, delta=delta, horizon=within_steps,
        tail_index=k, master_seed=master_seed,
    )
    batch = simulate_batch(cfg, trials)
    hit = region.contains(batch.states).any(axis=1)
    p = float(hit.mean())
    return EscapeEstimate(
        estimate=p,
        stderr=math.sqrt(p * (1.0 - p) / trials),
        trials=trials,
        within_steps=within_steps,
    )
