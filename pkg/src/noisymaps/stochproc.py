"""Simulation of interval maps driven by bounded uniform noise.

A process follows X_{n+1} = f_{k+n}(X_n) + xi_n for a map sequence (f_n),
a tail start index k and i.i.d. perturbations xi_n drawn uniformly from
[-delta, delta).  States may leave [0, 1]; maps clamp their argument, so
the dynamics remain well defined on the whole line.

Reproducibility contract
------------------------
The perturbation of trial t at step n depends only on (master_seed, t, n).
Each trial owns a Philox stream keyed by (master_seed, t); Philox is
counter based, so streams for distinct trials never overlap and can be
created in any order.  Batch simulation therefore yields bit-identical
trajectories no matter how trials are chunked or how many workers run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .maps import MapSequence, evaluate

__all__ = [
    "MAX_STATE_FLOATS",
    "ProcessConfig",
    "Trajectory",
    "TrajectoryBatch",
    "noise_stream",
    "simulate",
    "simulate_batch",
    "realized_noise",
]

# Largest state matrix simulate_batch materialises without a reducer:
# 2^27 doubles, about 1 GiB.
MAX_STATE_FLOATS = 2**27

_SEED_BOUND = 2**64


def noise_stream(master_seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial.

    The Philox key packs (master_seed, trial) into 128 bits, which realises
    the counter-based stream contract: distinct pairs yield independent
    streams regardless of creation order.
    """
    if not (0 <= master_seed < _SEED_BOUND):
        raise ValueError("master_seed must fit in an unsigned 64-bit integer")
    if not (0 <= trial < _SEED_BOUND):
        raise ValueError("trial must fit in an unsigned 64-bit integer")
    key = (int(master_seed) << 64) | int(trial)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ProcessConfig:
    """Full description of a noisy process experiment.

    horizon counts steps, so a trajectory holds horizon + 1 states.
    delta = 0 reproduces the deterministic nonautonomous orbit.
    """

    sequence: MapSequence
    x0: float
    delta: float
    horizon: int
    tail_index: int = 0
    master_seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.x0):
            raise ValueError("x0 must be finite")
        if not (self.delta >= 0.0 and math.isfinite(self.delta)):
            raise ValueError("delta must be a finite value >= 0")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.tail_index < 0:
            raise ValueError("tail_index must be >= 0")
        if not (0 <= self.master_seed < _SEED_BOUND):
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class Trajectory:
    """One realized path; states has length horizon + 1."""

    trial: int
    states: np.ndarray

    def __len__(self):
        return self.states.size


class TrajectoryBatch:
    """Trajectories for a contiguous range of trials, stored as a matrix.

    states[i] is the path of trial trials[i].  Iterating yields Trajectory
    views in trial order.
    """

    def __init__(self, config: ProcessConfig, trials: np.ndarray, states: np.ndarray):
        if states.shape != (trials.size, config.horizon + 1):
            raise ValueError("state matrix shape does not match trials and horizon")
        self.config = config
        self.trials = trials
        self.states = states

    def __len__(self) -> int:
        return self.trials.size

    def __iter__(self) -> Iterator[Trajectory]:
        for i in range(self.trials.size):
            yield Trajectory(trial=int(self.trials[i]), states=self.states[i])

    def trajectory(self, trial: int) -> Trajectory:
        idx = int(np.searchsorted(self.trials, trial))
        if idx >= self.trials.size or self.trials[idx] != trial:
            raise KeyError(f"trial {trial} not in batch")
        return Trajectory(trial=trial, states=self.states[idx])


def _noise_block(config: ProcessConfig, trials: np.ndarray) -> np.ndarray:
    """Perturbations for the given trials, one row per trial."""
    n = config.horizon
    u = np.empty((trials.size, n))
    for i, t in enumerate(trials):
        u[i] = noise_stream(config.master_seed, int(t)).random(n)
    # maps [0, 1) onto [-delta, delta); the right endpoint is never drawn
    return 2.0 * config.delta * u - config.delta


def _simulate_block(config: ProcessConfig, trials: np.ndarray) -> np.ndarray:
    noise = _noise_block(config, trials)
    states = np.empty((trials.size, config.horizon + 1))
    states[:, 0] = config.x0
    seq, k = config.sequence, config.tail_index
    for step in range(config.horizon):
        bp, vals = seq.map_at(k + step).knots
        states[:, step + 1] = np.interp(states[:, step], bp, vals) + noise[:, step]
    return states


def simulate(config: ProcessConfig, trial: int = 0) -> Trajectory:
    """Single realized path for one trial id."""
    states = _simulate_block(config, np.array([trial], dtype=np.uint64))
    return Trajectory(trial=trial, states=states[0])


def simulate_batch(
    config: ProcessConfig,
    n_trials: int,
    trial_offset: int = 0,
    workers: int = 1,
    reduce: Optional[Callable[[TrajectoryBatch], None]] = None,
    chunk_size: int = 8192,
) -> Optional[TrajectoryBatch]:
    """Simulate trials trial_offset .. trial_offset + n_trials - 1.

    Without ``reduce`` the full state matrix is returned and its size is
    capped at MAX_STATE_FLOATS entries.  With ``reduce`` the batch is
    processed in chunks of ``chunk_size`` trials, the callable consumes
    each chunk in trial order, and None is returned.

    ``workers`` > 1 distributes chunks over a thread pool.  Results are
    merged by trial index, so the output is bit-identical for any worker
    count or chunking.
    """
    if n_trials <= 0:
        raise ValueError("n_trials must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    total = n_trials * (config.horizon + 1)
    if reduce is None and total > MAX_STATE_FLOATS:
        raise ValueError(
            f"state matrix would hold {total} floats, above the cap of "
            f"{MAX_STATE_FLOATS}; pass a streaming `reduce` instead"
        )

    trials = np.arange(trial_offset, trial_offset + n_trials, dtype=np.uint64)

    if reduce is None:
        states = np.empty((n_trials, config.horizon + 1))

        def run(lo: int, hi: int):
            states[lo:hi] = _simulate_block(config, trials[lo:hi])

        spans = _spans(n_trials, workers if workers > 1 else 1, chunk_size)
        if workers == 1:
            for lo, hi in spans:
                run(lo, hi)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda s: run(*s), spans))
        return TrajectoryBatch(config, trials, states)

    # streaming mode: chunks are reduced strictly in trial order
    spans = _spans(n_trials, 1, chunk_size)
    if workers == 1:
        for lo, hi in spans:
            chunk = TrajectoryBatch(
                config, trials[lo:hi], _simulate_block(config, trials[lo:hi])
            )
            reduce(chunk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_block, config, trials[lo:hi])
                for lo, hi in spans
            ]
            for (lo, hi), fut in zip(spans, futures):
                reduce(TrajectoryBatch(config, trials[lo:hi], fut.result()))
    return None


def _spans(n: int, workers: int, chunk_size: int):
    """Contiguous index ranges covering range(n)."""
    size = min(chunk_size, max(1, -(-n // workers)))
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def realized_noise(batch: TrajectoryBatch) -> np.ndarray:
    """Recover xi_n = X_{n+1} - f_{k+n}(X_n) for every trajectory."""
    config = batch.config
    seq, k = config.sequence, config.tail_index
    out = np.empty((len(batch), config.horizon))
    for step in range(config.horizon):
        bp, vals = seq.map_at(k + step).knots
        out[:, step] = batch.states[:, step + 1] - np.interp(
            batch.states[:, step], bp, vals
        )
    return out
