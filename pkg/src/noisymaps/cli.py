"""Command line front end: experiment configs, batch runs, reports, plots.

Every verb assembles the same ExperimentConfig that a config file would
produce and funnels it through one executor, so flag-driven runs and
``run config.toml`` runs share validation, seeding and output formats.

Exit codes: 0 success, 1 configuration or input problems, 2 analysis
failure (the probe itself rejected the data; diagnostics are written
into the JSON report).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Optional

from . import __version__
from .chains import Ball, find_delta_chain
from .config import (
    ANALYSIS_SCHEMAS,
    ConfigError,
    ExperimentConfig,
    PROCESS_DEFAULTS,
    build_system,
    load_config,
    parse_config,
)
from .gallery import GALLERY, ConstructionError, constant_seq
from .maps import PiecewiseLinearMap
from .periodic import (
    DecompositionError,
    decompose_tree,
    find_periodic_points,
    liyorke_scan,
    shadow_candidates,
    shadow_fraction,
)
from .recurrence import (
    Region,
    RecurrenceQuery,
    detect_trap,
    escape_probability,
    estimate_recurrence,
)
from .report import (
    CSV_HEADER,
    dumps_json,
    plot_map,
    plot_trajectories,
    write_json,
    write_trajectories_csv,
)
from .stochproc import ProcessConfig, simulate_batch

__all__ = ["main"]


class CLIError(Exception):
    """A problem that maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; here bad flags are configuration
    # problems, so route them to exit code 1 instead
    def error(self, message):
        raise CLIError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="noisymaps",
        description="Simulate interval maps under bounded uniform noise "
        "and probe recurrence, trapping, chains, periodic structure, "
        "shadowing and sensitivity.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--trials", type=int, help="override the trial count")
    parser.add_argument(
        "--workers", type=int, default=1, help="worker threads for batch simulation"
    )
    parser.add_argument(
        "--out", default=".", help="directory for report files (default: .)"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="execute a config file")
    run.add_argument("config", help="path to a TOML experiment config")

    def system_flags(p, need_seq=True):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--map", help="gallery map name")
        if need_seq:
            group.add_argument("--seq", help="gallery sequence name")

    def process_flags(p):
        p.add_argument("--k", type=int, default=PROCESS_DEFAULTS["k"])
        p.add_argument("--x0", type=float, default=PROCESS_DEFAULTS["x0"])
        p.add_argument("--delta", type=float, default=PROCESS_DEFAULTS["delta"])
        p.add_argument(
            "--horizon", type=int, default=PROCESS_DEFAULTS["horizon"]
        )

    p = sub.add_parser("simulate", help="dump noisy trajectories")
    system_flags(p)
    process_flags(p)

    p = sub.add_parser("recurrence", help="neighbourhood-return estimate")
    system_flags(p)
    process_flags(p)
    p.add_argument("--center", type=float, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--min-visits", type=int, required=True)
    p.add_argument("--burn-in", type=int)
    p.add_argument(
        "--deltas", help="comma-separated noise half-widths to sweep"
    )

    p = sub.add_parser("trap", help="absorbing-region check")
    system_flags(p)
    process_flags(p)
    p.add_argument(
        "--region",
        required=True,
        help="comma-separated interval bounds lo1,hi1[,lo2,hi2,...]",
    )

    p = sub.add_parser("chain", help="delta-chain reachability search")
    system_flags(p, need_seq=False)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--target-center", type=float, required=True)
    p.add_argument("--target-radius", type=float, required=True)
    p.add_argument("--delta-prime", type=float, required=True)
    p.add_argument("--spacing", type=float)

    p = sub.add_parser("periodic", help="periodic point scan")
    system_flags(p, need_seq=False)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--grid-size", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("decompose", help="orbit-portion decomposition")
    system_flags(p, need_seq=False)
    p.add_argument("--max-level", type=int, required=True)
    p.add_argument("--orbit-len", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("shadow", help="periodic shadowing fractions")
    system_flags(p, need_seq=False)
    process_flags(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--window", required=True, help="inclusive step range lo,hi")
    p.add_argument("--max-period", type=int)

    p = sub.add_parser("liyorke", help="close-yet-separating pair scan")
    system_flags(p)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--closeness", type=float, required=True)
    p.add_argument("--separation", type=float, required=True)
    p.add_argument("--burn-in", type=int)

    p = sub.add_parser("gallery", help="list gallery entries or dump one")
    p.add_argument("name", nargs="?", help="entry to dump as JSON")

    p = sub.add_parser("plot", help="render a map graph or trajectory CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", help="gallery map name")
    src.add_argument("--csv", help="trajectory CSV produced by simulate")
    src.add_argument("--breakpoints", help="inline map: comma-separated x knots")
    p.add_argument("--values", help="inline map: comma-separated values")
    p.add_argument("--out-file", required=True, help="SVG path to write")

    return parser


def _floats(text: str, flag: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise CLIError(f"{flag} expects comma-separated numbers: {exc}") from exc


def _config_from_flags(args) -> ExperimentConfig:
    """Re-express a verb invocation as the equivalent config file text."""
    lines = ["[system]"]
    if getattr(args, "map", None):
        lines.append(f'map = "{args.map}"')
    else:
        lines.append(f'seq = "{args.seq}"')
    lines.append("[process]")
    for key in ("k", "x0", "delta", "horizon"):
        if hasattr(args, key):
            lines.append(f"{key} = {getattr(args, key)!r}")
    lines.append("[analysis]")
    lines.append(f'kind = "{args.verb}"')
    body = {
        "recurrence": lambda: [
            f"center = {args.center!r}",
            f"radius = {args.radius!r}",
            f"min_visits = {args.min_visits}",
            *([f"burn_in = {args.burn_in}"] if args.burn_in is not None else []),
            *(
                [f"deltas = {_floats(args.deltas, '--deltas')!r}"]
                if args.deltas
                else []
            ),
        ],
        "trap": lambda: [f"region = {_intervals(args.region)!r}"],
        "chain": lambda: [
            f"start = {args.start!r}",
            f"target_center = {args.target_center!r}",
            f"target_radius = {args.target_radius!r}",
            f"delta_prime = {args.delta_prime!r}",
            *([f"spacing = {args.spacing!r}"] if args.spacing is not None else []),
        ],
        "periodic": lambda: [
            f"period = {args.period}",
            *([f"grid_size = {args.grid_size}"] if args.grid_size else []),
            *([f"tol = {args.tol!r}"] if args.tol is not None else []),
        ],
        "decompose": lambda: [
            f"max_level = {args.max_level}",
            *([f"orbit_len = {args.orbit_len}"] if args.orbit_len else []),
            *([f"tol = {args.tol!r}"] if args.tol is not None else []),
        ],
        "shadow": lambda: [
            f"eps = {args.eps!r}",
            f"window = {[int(v) for v in _floats(args.window, '--window')]!r}",
            *([f"max_period = {args.max_period}"] if args.max_period else []),
        ],
        "liyorke": lambda: [
            f"n_pairs = {args.pairs}",
            f"horizon = {args.horizon}",
            f"closeness = {args.closeness!r}",
            f"separation = {args.separation!r}",
            *([f"burn_in = {args.burn_in}"] if args.burn_in is not None else []),
        ],
        "simulate": lambda: [],
    }[args.verb]()
    lines.extend(body)
    lines.append("[output]")
    lines.append(f'json = "{args.verb}-report.json"')
    if args.verb == "simulate":
        lines.append('csv = "simulate-trajectories.csv"')
    return parse_config("\n".join(lines))


def _intervals(text: str) -> list:
    vals = _floats(text, "--region")
    if len(vals) < 2 or len(vals) % 2 != 0:
        raise CLIError("--region expects an even number of bounds lo1,hi1,...")
    return [[vals[i], vals[i + 1]] for i in range(0, len(vals), 2)]


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    process = dict(config.process)
    if args.seed is not None:
        if args.seed < 0:
            raise CLIError("--seed must be >= 0")
        process["master_seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise CLIError("--trials must be >= 1")
        process["trials"] = args.trials
    return ExperimentConfig(
        system=config.system,
        process=process,
        analysis=config.analysis,
        output=config.output,
    )


def _out_path(out_dir: str, name: Optional[str]) -> Optional[str]:
    if name is None:
        return None
    if os.path.isabs(name):
        return name
    return os.path.join(out_dir, name)


def _static_map(kind: str, obj) -> PiecewiseLinearMap:
    """The map that static analyses act on: a seq contributes its limit."""
    if kind == "map":
        return obj
    if obj.limit is None:
        raise CLIError("this analysis needs a map; the sequence has no limit map")
    return obj.limit


def execute(config: ExperimentConfig, workers: int, out_dir: str) -> dict:
    """Run the configured analysis and write its reports.

    Returns the JSON payload that was written.  Analysis failures
    (DecompositionError, ConstructionError) are re-raised after writing a
    diagnostics payload; the caller translates them to exit code 2.
    """
    kind, system = build_system(config)
    process = config.process
    analysis = dict(config.analysis)
    akind = analysis.pop("kind")
    seq = constant_seq(system) if kind == "map" else system

    os.makedirs(out_dir, exist_ok=True)
    json_path = _out_path(out_dir, config.output["json"])
    csv_path = _out_path(out_dir, config.output.get("csv"))
    svg_path = _out_path(out_dir, config.output.get("svg"))

    payload = {
        "version": __version__,
        "config": config.to_dict(),
    }
    try:
        result, batch = _run_analysis(akind, analysis, seq, kind, system, process, workers)
    except (DecompositionError, ConstructionError) as exc:
        payload["error"] = {
            "type": type(exc).__name__,
            "message": str(exc),
            "diagnostics": _plain(exc.diagnostics),
        }
        if json_path:
            write_json(json_path, payload)
        raise

    payload["result"] = result
    if json_path:
        write_json(json_path, payload)
    if csv_path:
        if batch is None:
            raise CLIError(
                f"analysis '{akind}' produces no trajectories; drop the csv output"
            )
        write_trajectories_csv(csv_path, batch)
    if svg_path:
        if akind == "simulate" and batch is not None:
            shown = [(t.trial, t.states) for t in batch][:10]
            plot_trajectories(svg_path, shown, title=_system_title(config))
        else:
            plot_map(svg_path, _static_map(kind, system), title=_system_title(config))
    return payload


def _system_title(config: ExperimentConfig) -> str:
    return config.system["name"] or "inline map"


def _process_config(seq, process) -> ProcessConfig:
    return ProcessConfig(
        sequence=seq,
        x0=process["x0"],
        delta=process["delta"],
        horizon=process["horizon"],
        tail_index=process["k"],
        master_seed=process["master_seed"],
    )


def _run_analysis(akind, params, seq, kind, system, process, workers):
    """Dispatch one analysis; returns (JSON-ready result, batch or None)."""
    if akind == "simulate":
        batch = simulate_batch(
            _process_config(seq, process), process["trials"], workers=workers
        )
        final = batch.states[:, -1]
        result = {
            "trials": process["trials"],
            "horizon": process["horizon"],
            "final_state": {
                "mean": float(final.mean()),
                "min": float(final.min()),
                "max": float(final.max()),
            },
        }
        return result, batch

    if akind == "recurrence":
        query = RecurrenceQuery(
            center=params["center"],
            radius=params["radius"],
            min_visits=params["min_visits"],
            horizon=process["horizon"],
            burn_in=params.get("burn_in"),
            deltas=tuple(params["deltas"]) if "deltas" in params else None,
            trials=process["trials"],
        )
        report = estimate_recurrence(
            seq, process["k"], query, master_seed=process["master_seed"]
        )
        return report.to_dict(), None

    if akind == "trap":
        region = Region.union(tuple(tuple(iv) for iv in params["region"]))
        report = detect_trap(
            seq,
            k=process["k"],
            x0=process["x0"],
            delta=process["delta"],
            horizon=process["horizon"],
            trials=process["trials"],
            region=region,
            master_seed=process["master_seed"],
        )
        return report.to_dict(), None

    if akind == "escape":
        region = Region.union(tuple(tuple(iv) for iv in params["region"]))
        estimate = escape_probability(
            seq,
            k=process["k"],
            x0=process["x0"],
            delta=process["delta"],
            region=region,
            within_steps=params["within_steps"],
            trials=process["trials"],
            master_seed=process["master_seed"],
        )
        return estimate.to_dict(), None

    if akind == "chain":
        f = _static_map(kind, system)
        result = find_delta_chain(
            f,
            start=params["start"],
            target=Ball(params["target_center"], params["target_radius"]),
            delta_prime=params["delta_prime"],
            h=params.get("spacing"),
        )
        return result.to_dict(), None

    if akind == "periodic":
        f = _static_map(kind, system)
        kwargs = {}
        if "grid_size" in params:
            kwargs["grid_size"] = params["grid_size"]
        if "tol" in params:
            kwargs["tol"] = params["tol"]
        if "domain" in params:
            kwargs["domain"] = tuple(params["domain"])
        scan = find_periodic_points(f, params["period"], **kwargs)
        return scan.to_dict(), None

    if akind == "decompose":
        f = _static_map(kind, system)
        kwargs = {}
        for key in ("orbit_len", "tol", "x0", "transient"):
            if key in params:
                kwargs[key] = params[key]
        tree = decompose_tree(f, params["max_level"], **kwargs)
        return tree.to_dict(), None

    if akind == "shadow":
        f = _static_map(kind, system)
        candidates = shadow_candidates(f, max_period=params.get("max_period", 16))
        batch = simulate_batch(
            _process_config(seq, process), process["trials"], workers=workers
        )
        summary = shadow_fraction(
            batch, f, candidates, eps=params["eps"], window=tuple(params["window"])
        )
        return summary.to_dict(), batch

    if akind == "liyorke":
        report = liyorke_scan(
            seq if kind == "seq" else system,
            n_pairs=params["n_pairs"],
            horizon=params["horizon"],
            closeness=params["closeness"],
            separation=params["separation"],
            **({"burn_in": params["burn_in"]} if "burn_in" in params else {}),
            master_seed=process["master_seed"],
        )
        return report.to_dict(), None

    raise AssertionError(f"unhandled analysis kind {akind}")


def _plain(obj):
    """Diagnostics to JSON-ready values (tuples to lists, numpy to python)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            return obj.item()
        except Exception:
            return str(obj)
    return obj


def _cmd_gallery(args, out_dir: str) -> int:
    if args.name is None:
        for name in sorted(GALLERY):
            _, kind = GALLERY[name]
            print(f"{name}  ({kind})")
        return 0
    if args.name not in GALLERY:
        raise CLIError(
            f"unknown gallery name '{args.name}'; known: "
            + ", ".join(sorted(GALLERY))
        )
    builder, kind = GALLERY[args.name]
    obj = builder()
    if kind == "map":
        payload = {
            "name": args.name,
            "kind": kind,
            "breakpoints": list(obj.breakpoints),
            "values": list(obj.values),
        }
    else:
        payload = {"name": args.name, "kind": kind, "sequence": obj.kind}
        if obj.limit is not None:
            payload["limit"] = {
                "breakpoints": list(obj.limit.breakpoints),
                "values": list(obj.limit.values),
            }
    sys.stdout.write(dumps_json(payload))
    return 0


def _cmd_plot(args, out_dir: str) -> int:
    out_file = _out_path(out_dir, args.out_file)
    os.makedirs(out_dir, exist_ok=True)
    if args.csv:
        paths = _read_trajectories(args.csv)
        plot_trajectories(out_file, paths[:10], title=os.path.basename(args.csv))
        return 0
    if args.map:
        if args.map not in GALLERY:
            raise CLIError(f"unknown gallery name '{args.map}'")
        builder, kind = GALLERY[args.map]
        if kind != "map":
            raise CLIError(f"gallery entry '{args.map}' is a sequence, not a map")
        plot_map(out_file, builder(), title=args.map)
        return 0
    if not args.values:
        raise CLIError("--breakpoints requires --values")
    f = _inline_map(args.breakpoints, args.values)
    plot_map(out_file, f, title="inline map")
    return 0


def _inline_map(bp_text: str, val_text: str) -> PiecewiseLinearMap:
    bps = _floats(bp_text, "--breakpoints")
    vals = _floats(val_text, "--values")
    try:
        return PiecewiseLinearMap(tuple(bps), tuple(vals))
    except ValueError as exc:
        raise CLIError(f"bad inline map: {exc}") from exc


def _read_trajectories(path: str) -> list:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_HEADER.split(","):
                raise CLIError(
                    f"{path}: expected header '{CSV_HEADER}', got {header}"
                )
            by_trial: dict = {}
            for row in reader:
                if len(row) != 3:
                    raise CLIError(f"{path}: malformed row {row}")
                trial, _, x = row
                by_trial.setdefault(int(trial), []).append(float(x))
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CLIError(f"{path}: malformed CSV: {exc}") from exc
    return sorted(by_trial.items())


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        out_dir = args.out
        if args.verb == "gallery":
            return _cmd_gallery(args, out_dir)
        if args.verb == "plot":
            return _cmd_plot(args, out_dir)
        if args.verb == "run":
            config = load_config(args.config)
        else:
            config = _config_from_flags(args)
        config = _apply_overrides(config, args)
        if args.workers < 1:
            raise CLIError("--workers must be >= 1")
        execute(config, workers=args.workers, out_dir=out_dir)
        return 0
    except (CLIError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DecompositionError, ConstructionError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
