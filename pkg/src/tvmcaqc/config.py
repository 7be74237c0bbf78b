"""Experiment configuration: TOML groups, dotted-key overrides, validation."""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

WORKERS_ENV = "TVMCAQC_WORKERS"

DEFAULTS: dict = {
    "model": {"family": "RI1D", "size": 8, "coupling": "normal"},
    "anneal": {"times": [4.0], "schedule": "LINEAR"},
    "tvmc": {
        "dt": None,
        "dt_fraction": 1e-3,
        "n_samples": 10000,
        "n_chains": 0,  # 0 -> worker count
        "burn_in_sweeps": None,
        "thin_sweeps": 1,
        "reg_mode": "SVD_CUTOFF",
        "reg_value": 1e-3,
        "support": "GRAPH_EDGES",
        "exact": False,
        "measure_exact": False,
        "output_stride": 10,
        "check_psd": True,
    },
    "ensemble": {"size": 1, "base_seed": 0},
    "oracle": {"ground": True, "dynamics": False, "p_success_mode": "auto", "dt_fraction": 1e-3},
    "sa": {"n_sweeps": 1000, "n_repeats": 100, "beta_start": 0.1, "beta_end": 3.0},
    "output": {"dir": "runs/out"},
}


class ConfigError(ValueError):
    pass


def parse_value(text: str):
    """A TOML literal when it parses as one, otherwise the bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in out:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} is a group, got {value!r}")
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = value
    return out


def apply_override(data: dict, dotted: str, value) -> dict:
    parts = dotted.split(".")
    nested = value
    for part in reversed(parts):
        nested = {part: nested}
    return _merge(data, nested)


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    source_text: str = ""

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: list[tuple[str, object]] = ()) -> "ExperimentConfig":
        text = Path(path).read_text() if path else ""
        data = _merge(DEFAULTS, tomllib.loads(text)) if text else copy.deepcopy(DEFAULTS)
        for key, value in overrides:
            data = apply_override(data, key, value)
        cfg = cls(data, text)
        cfg.validate()
        return cfg

    def __getitem__(self, group: str) -> dict:
        return self.data[group]

    def with_overrides(self, **groups) -> "ExperimentConfig":
        cfg = ExperimentConfig(_merge(self.data, groups), self.source_text)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        d = self.data
        if d["model"]["family"] not in ("RI1D", "SK", "CHIMERA"):
            raise ConfigError(f"unsupported family {d['model']['family']!r}")
        if d["model"]["coupling"] not in ("normal", "pm1"):
            raise ConfigError("model.coupling must be 'normal' or 'pm1'")
        times = d["anneal"]["times"]
        if not isinstance(times, list) or not times or any(not (float(t) > 0) for t in times):
            raise ConfigError("anneal.times must be a nonempty list of positive numbers")
        if d["ensemble"]["size"] < 1:
            raise ConfigError("ensemble.size must be >= 1")
        if d["sa"]["n_repeats"] < 1:
            raise ConfigError("sa.n_repeats must be >= 1")
        if d["sa"]["n_sweeps"] < 1:
            raise ConfigError("sa.n_sweeps must be >= 1")
        if d["tvmc"]["n_samples"] < 1:
            raise ConfigError("tvmc.n_samples must be >= 1")
        if d["oracle"]["p_success_mode"] not in ("auto", "EXACT_SUM", "SAMPLED"):
            raise ConfigError("oracle.p_success_mode must be auto, EXACT_SUM or SAMPLED")

    @property
    def size(self):
        size = self.data["model"]["size"]
        return tuple(size) if isinstance(size, list) else size

    @property
    def out_dir(self) -> Path:
        return Path(self.data["output"]["dir"])


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, os.cpu_count() or 1)
