"""Deterministic report writers: canonical JSON, CSV dumps, SVG figures.

Identical payloads must serialize to identical bytes across runs, worker
counts and platforms, so this module controls every formatting choice:

* JSON is emitted by a small canonical writer — keys sorted, two-space
  indent, floats always printed with 17 significant digits (enough to
  round-trip a double; the stdlib encoder cannot be told to do this).
* CSV rows carry the header ``trial,step,x`` with the same float format.
* Figures go through matplotlib's Agg backend with a fixed hash salt,
  a fixed 800x800 canvas and no embedded creation date.
"""

from __future__ import annotations

import csv
import math
from typing import Optional

import matplotlib

matplotlib.use("Agg", force=True)
matplotlib.rcParams["svg.hashsalt"] = "noisymaps"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .maps import PiecewiseLinearMap  # noqa: E402

__all__ = [
    "CSV_HEADER",
    "dumps_json",
    "fmt_float",
    "plot_map",
    "plot_trajectories",
    "write_json",
    "write_trajectories_csv",
]

CSV_HEADER = "trial,step,x"


def fmt_float(x: float) -> str:
    """A float as text with 17 significant digits.

    Raises on non-finite values: a report containing NaN or infinity is a
    bug upstream, not something to serialize quietly.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value in report: {x!r}")
    return format(x, ".17g")


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append(f'{inner}"{_escape(key)}": ')
            _emit(obj[key], indent + 1, out)
            out.append(",\n" if i < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(items):
            out.append(inner)
            _emit(item, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, str):
        out.append(f'"{_escape(obj)}"')
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt_float(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), indent, out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} value {obj!r}")


def _escape(s: str) -> str:
    return (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def dumps_json(payload) -> str:
    """Canonical JSON text: sorted keys, two-space indent, 17-digit floats."""
    out: list = []
    _emit(payload, 0, out)
    out.append("\n")
    return "".join(out)


def write_json(path, payload) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(payload))


def write_trajectories_csv(path, batch) -> None:
    """Dump a trajectory batch as ``trial,step,x`` rows in trial order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for traj in batch:
            trial = traj.trial
            writer.writerows(
                (trial, step, fmt_float(x)) for step, x in enumerate(traj.states)
            )


def _new_figure():
    # SVG output is sized in points (72 per inch), so this figsize pins
    # the canvas to exactly 800 x 800 units
    return plt.figure(figsize=(800.0 / 72.0, 800.0 / 72.0))


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_map(path, f: PiecewiseLinearMap, title: Optional[str] = None) -> None:
    """Graph of a piecewise linear map as a polyline in the unit square."""
    fig = _new_figure()
    ax = fig.add_subplot(111)
    ax.plot(f.breakpoints, f.values, color="#1f4e79", linewidth=1.5)
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.grid(True, linewidth=0.3, alpha=0.5)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_trajectories(path, paths, title: Optional[str] = None) -> None:
    """Step-versus-value polylines, one per (trial, states) pair."""
    pairs = [(trial, np.asarray(states, dtype=float)) for trial, states in paths]
    fig = _new_figure()
    ax = fig.add_subplot(111)
    for trial, states in pairs:
        ax.plot(np.arange(states.size), states, linewidth=0.8, label=f"trial {trial}")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("step")
    ax.set_ylabel("x")
    ax.grid(True, linewidth=0.3, alpha=0.5)
    if pairs and len(pairs) <= 10:
        ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    _save(fig, path)
