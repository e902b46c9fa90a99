"""Experiment files: YAML or JSON key/value trees with units in the key names."""
from __future__ import annotations

import json
from dataclasses import asdict, fields
from importlib import resources
from pathlib import Path

import yaml

from .latency import LatencyCalibration
from .montecarlo import ExperimentConfig

BUNDLED = ("fig6", "fig7", "fig8", "fig9a", "fig9b", "fig10", "fig11", "table1")

# numeric calibration fields keep their unit suffix, so values load unconverted
_LATENCY_KEYS = ("t_prop_ms", "t_dec_floor_ms", "t_dec_per_sample_us", "arrival_phase_ms",
                 "arrival_period_ms", "minislot_symbols")
_LATENCY_EXTRA = {"pattern", "patterns", "retry_period_ms", "m"}
_TOP_KEYS = {f.name for f in fields(ExperimentConfig)} - {"calibration", "pattern", "retry_period_ms"}
_TOP_KEYS |= {"latency", "description"}


class ConfigError(ValueError):
    pass


def resolve_path(name_or_path: str) -> Path:
    """A file path, or the name of a bundled experiment."""
    p = Path(name_or_path)
    if p.exists():
        return p
    if name_or_path in BUNDLED:
        return Path(str(resources.files("cast_sim") / "configs" / f"{name_or_path}.yaml"))
    raise ConfigError(f"config file not found: {name_or_path}")


def load_tree(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        tree = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{path}: {where}{getattr(e, 'problem', e)}") from None
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    # a run manifest carries the resolved config it was produced from
    if "manifest_version" in tree:
        tree = tree.get("config")
        if not isinstance(tree, dict):
            raise ConfigError(f"{path}: manifest has no config mapping")
    return tree


def latency_section(tree: dict, where: str = "latency") -> tuple[LatencyCalibration, dict]:
    sec = tree.get("latency") or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{where}: must be a mapping")
    unknown = set(sec) - set(_LATENCY_KEYS) - _LATENCY_EXTRA
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    kw = {}
    for key in _LATENCY_KEYS:
        if key in sec:
            v = sec[key]
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
            kw[key] = int(v) if key == "minislot_symbols" else float(v)
    extra = {k: sec[k] for k in _LATENCY_EXTRA if k in sec}
    return LatencyCalibration(**kw), extra


def experiment_from_tree(tree: dict, seed: int | None = None, trials: int | None = None) -> ExperimentConfig:
    unknown = set(tree) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}")
    if "experiment_id" not in tree:
        raise ConfigError("experiment_id: required field missing")
    cal, extra = latency_section(tree)
    kw = {k: v for k, v in tree.items() if k not in ("latency", "description")}
    if seed is not None:
        kw["seed"] = seed
    if trials is not None:
        kw["trials"] = trials
    if "pattern" in extra:
        kw["pattern"] = extra["pattern"]
    if extra.get("retry_period_ms") is not None:
        kw["retry_period_ms"] = float(extra["retry_period_ms"])
    for key in ("n", "tau", "trials", "seed", "bound_trials"):
        if key in kw and (not isinstance(kw[key], int) or isinstance(kw[key], bool)):
            raise ConfigError(f"{key}: expected an integer, got {kw[key]!r}")
    try:
        return ExperimentConfig(calibration=cal, **kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def snapshot(cfg: ExperimentConfig) -> dict:
    """Config tree that reproduces cfg when loaded back."""
    d = asdict(cfg)
    cal = d.pop("calibration")
    d["latency"] = {"pattern": d.pop("pattern"), **cal}
    rp = d.pop("retry_period_ms")
    if rp is not None:
        d["latency"]["retry_period_ms"] = rp
    for key in ("k", "m", "snr_db", "selection_rule"):
        d[key] = list(d[key])
    return d
