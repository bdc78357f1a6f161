"""Experiment configuration: TOML schema, fail-closed validation.

A config file has up to four sections::

    [system]            what to iterate: a gallery name or an inline map
      map = "tent"      # or: seq = "shrinking-spike"
      # or an inline piecewise linear map literal:
      # breakpoints = [0.0, 0.5, 1.0]
      # values      = [0.0, 1.0, 0.0]
      [system.params]   # optional keyword arguments for the gallery builder
      lam = 0.8249080

    [process]           noisy-process parameters (defaults in PROCESS_DEFAULTS)
      k = 0             # sequence tail index: step n applies map k + n
      x0 = 0.5
      delta = 0.05
      horizon = 2000
      trials = 1000
      master_seed = 0

    [analysis]          required; kind selects the probe and its parameters
      kind = "periodic"
      period = 2

    [output]            file names; json defaults to "report.json"
      json = "report.json"
      csv  = "paths.csv"
      svg  = "figure.svg"

Unknown sections and unknown keys are errors (fail-closed).  Error
messages carry the line number of the offending key when it can be
found in the source text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from .gallery import GALLERY
from .maps import MapSequence, PiecewiseLinearMap

__all__ = [
    "ANALYSIS_SCHEMAS",
    "ConfigError",
    "ExperimentConfig",
    "PROCESS_DEFAULTS",
    "build_system",
    "load_config",
    "parse_config",
]


class ConfigError(ValueError):
    """A config file failed to parse or validate."""


PROCESS_DEFAULTS = {
    "k": 0,
    "x0": 0.5,
    "delta": 0.0,
    "horizon": 1000,
    "trials": 100,
    "master_seed": 0,
}

# per analysis kind: {key: (required, type tag)}; type tags are checked by
# _coerce below.  "number" accepts ints and floats, "int" only ints.
ANALYSIS_SCHEMAS = {
    "simulate": {},
    "recurrence": {
        "center": (True, "number"),
        "radius": (True, "number"),
        "min_visits": (True, "int"),
        "burn_in": (False, "int"),
        "deltas": (False, "number_list"),
    },
    "trap": {
        "region": (True, "interval_list"),
    },
    "escape": {
        "region": (True, "interval_list"),
        "within_steps": (True, "int"),
    },
    "chain": {
        "start": (True, "number"),
        "target_center": (True, "number"),
        "target_radius": (True, "number"),
        "delta_prime": (True, "number"),
        "spacing": (False, "number"),
    },
    "periodic": {
        "period": (True, "int"),
        "grid_size": (False, "int"),
        "tol": (False, "number"),
        "domain": (False, "interval"),
    },
    "decompose": {
        "max_level": (True, "int"),
        "orbit_len": (False, "int"),
        "tol": (False, "number"),
        "x0": (False, "number"),
        "transient": (False, "int"),
    },
    "shadow": {
        "eps": (True, "number"),
        "window": (True, "int_interval"),
        "max_period": (False, "int"),
    },
    "liyorke": {
        "n_pairs": (True, "int"),
        "horizon": (True, "int"),
        "closeness": (True, "number"),
        "separation": (True, "number"),
        "burn_in": (False, "int"),
    },
}

_PROCESS_TYPES = {
    "k": "int",
    "x0": "number",
    "delta": "number",
    "horizon": "int",
    "trials": "int",
    "master_seed": "int",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: resolved sections as plain dicts."""

    system: dict
    process: dict
    analysis: dict
    output: dict

    def to_dict(self) -> dict:
        return {
            "system": dict(self.system),
            "process": dict(self.process),
            "analysis": dict(self.analysis),
            "output": dict(self.output),
        }


def _line_of(text: str, token: str):
    pattern = re.compile(rf"(?<![\w.-]){re.escape(token)}(?![\w-])")
    for i, line in enumerate(text.splitlines(), 1):
        if pattern.search(line.split("#", 1)[0]):
            return i
    return None


def _err(text: str, token: str, message: str) -> ConfigError:
    line = _line_of(text, token)
    prefix = f"line {line}: " if line is not None else ""
    return ConfigError(prefix + message)


def _coerce(text: str, key: str, value, tag: str):
    if tag == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise _err(text, key, f"{key} must be an integer, got {value!r}")
        return value
    if tag == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _err(text, key, f"{key} must be a number, got {value!r}")
        return float(value)
    if tag == "string":
        if not isinstance(value, str):
            raise _err(text, key, f"{key} must be a string, got {value!r}")
        return value
    if tag == "number_list":
        if not isinstance(value, list) or not value:
            raise _err(text, key, f"{key} must be a non-empty array of numbers")
        return [_coerce(text, key, v, "number") for v in value]
    if tag == "interval":
        if not (isinstance(value, list) and len(value) == 2):
            raise _err(text, key, f"{key} must be a two-element array [lo, hi]")
        return [_coerce(text, key, v, "number") for v in value]
    if tag == "int_interval":
        if not (isinstance(value, list) and len(value) == 2):
            raise _err(text, key, f"{key} must be a two-element array [lo, hi]")
        return [_coerce(text, key, v, "int") for v in value]
    if tag == "interval_list":
        if not isinstance(value, list) or not value:
            raise _err(text, key, f"{key} must be a non-empty array of [lo, hi] pairs")
        return [_coerce(text, key, v, "interval") for v in value]
    raise AssertionError(f"unknown schema tag {tag}")


def _check_keys(text: str, section: str, data: dict, allowed) -> None:
    for key in data:
        if key not in allowed:
            raise _err(text, key, f"unknown key '{key}' in [{section}]")


def _validate_system(text: str, raw: dict) -> dict:
    allowed = {"map", "seq", "breakpoints", "values", "params"}
    _check_keys(text, "system", raw, allowed)
    named = [k for k in ("map", "seq") if k in raw]
    inline = {"breakpoints", "values"} & set(raw)
    if named and inline:
        raise _err(
            text, named[0], "[system] cannot mix a gallery name with an inline map"
        )
    if len(named) > 1:
        raise _err(text, "seq", "[system] takes either 'map' or 'seq', not both")
    if named:
        key = named[0]
        name = _coerce(text, key, raw[key], "string")
        if name not in GALLERY:
            raise _err(
                text,
                key,
                f"unknown gallery name '{name}'; known: {', '.join(sorted(GALLERY))}",
            )
        _, kind = GALLERY[name]
        want = "map" if key == "map" else "seq"
        if kind != want:
            raise _err(
                text, key, f"gallery entry '{name}' is a {kind}, not a {want}"
            )
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise _err(text, "params", "[system.params] must be a table")
        for pkey, pval in params.items():
            if isinstance(pval, bool) or not isinstance(pval, (int, float)):
                raise _err(
                    text, pkey, f"builder parameter {pkey} must be a number"
                )
        return {"kind": want, "name": name, "params": dict(params)}
    if inline != {"breakpoints", "values"}:
        raise _err(
            text,
            "system",
            "[system] needs 'map', 'seq', or both 'breakpoints' and 'values'",
        )
    if "params" in raw:
        raise _err(text, "params", "inline maps take no [system.params]")
    bps = _coerce(text, "breakpoints", raw["breakpoints"], "number_list")
    vals = _coerce(text, "values", raw["values"], "number_list")
    try:
        PiecewiseLinearMap(tuple(bps), tuple(vals))
    except ValueError as exc:
        raise _err(text, "breakpoints", f"bad inline map: {exc}") from exc
    return {"kind": "map", "name": None, "breakpoints": bps, "values": vals}


def _validate_process(text: str, raw: dict) -> dict:
    _check_keys(text, "process", raw, _PROCESS_TYPES)
    process = dict(PROCESS_DEFAULTS)
    for key, value in raw.items():
        process[key] = _coerce(text, key, value, _PROCESS_TYPES[key])
    if process["k"] < 0:
        raise _err(text, "k", "k must be >= 0")
    if process["delta"] < 0.0:
        raise _err(text, "delta", "delta must be >= 0")
    if process["horizon"] < 1:
        raise _err(text, "horizon", "horizon must be >= 1")
    if process["trials"] < 1:
        raise _err(text, "trials", "trials must be >= 1")
    if process["master_seed"] < 0:
        raise _err(text, "master_seed", "master_seed must be >= 0")
    return process


def _validate_analysis(text: str, raw: dict) -> dict:
    if not raw or "kind" not in raw:
        raise _err(
            text,
            "analysis",
            "[analysis] must name a kind: " + ", ".join(sorted(ANALYSIS_SCHEMAS)),
        )
    kind = _coerce(text, "kind", raw["kind"], "string")
    if kind not in ANALYSIS_SCHEMAS:
        raise _err(
            text,
            "kind",
            f"unknown analysis kind '{kind}'; known: "
            + ", ".join(sorted(ANALYSIS_SCHEMAS)),
        )
    schema = ANALYSIS_SCHEMAS[kind]
    _check_keys(text, "analysis", raw, {"kind", *schema})
    analysis = {"kind": kind}
    for key, (required, tag) in schema.items():
        if key in raw:
            analysis[key] = _coerce(text, key, raw[key], tag)
        elif required:
            raise _err(text, "kind", f"analysis '{kind}' requires key '{key}'")
    return analysis


def _validate_output(text: str, raw: dict) -> dict:
    allowed = {"json", "csv", "svg"}
    _check_keys(text, "output", raw, allowed)
    output = {"json": "report.json"}
    for key in allowed:
        if key in raw:
            output[key] = _coerce(text, key, raw[key], "string")
    return output


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; raises ConfigError on any problem."""
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    for section in data:
        if section not in ("system", "process", "analysis", "output"):
            raise _err(text, section, f"unknown section [{section}]")
        if not isinstance(data[section], dict):
            raise _err(text, section, f"[{section}] must be a section, not a value")
    if "system" not in data:
        raise ConfigError("missing required section [system]")
    if "analysis" not in data:
        raise ConfigError("missing required section [analysis]")
    return ExperimentConfig(
        system=_validate_system(text, data["system"]),
        process=_validate_process(text, data.get("process", {})),
        analysis=_validate_analysis(text, data["analysis"]),
        output=_validate_output(text, data.get("output", {})),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def build_system(config: ExperimentConfig):
    """Instantiate the configured system.

    Returns ("map", PiecewiseLinearMap) or ("seq", MapSequence).
    """
    system = config.system
    if system["name"] is None:
        return "map", PiecewiseLinearMap(
            tuple(system["breakpoints"]), tuple(system["values"])
        )
    builder, kind = GALLERY[system["name"]]
    try:
        obj = builder(**system["params"])
    except TypeError as exc:
        raise ConfigError(
            f"gallery builder '{system['name']}' rejected parameters "
            f"{system['params']}: {exc}"
        ) from exc
    return kind, obj
