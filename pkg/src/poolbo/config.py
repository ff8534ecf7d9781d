"""Experiment configuration: a sectioned YAML file (JSON works too).

Validation is strict and happens before any computation: unknown keys are
rejected at every level, and every value goes through the same constructors
the engine uses, so a config that validates will run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .engine import EngineConfig, InitPolicy
from .errors import ConfigError
from .pools import infer_format
from .training import TrainConfig

_TOP_KEYS = {"dataset", "surrogate", "acquisition", "iterations", "seeds",
             "init", "projection", "training", "fit", "warm_start",
             "coverage_quantile", "output"}
_DATASET_KEYS = {"path", "format"}
_INIT_KEYS = {"n_init", "rule"}
_PROJECTION_KEYS = {"width", "dropout"}
_TRAINING_KEYS = {"lr_gp", "lr_feat", "weight_decay", "clip_norm", "lr_decay",
                  "decay_every", "epochs"}
_FIT_KEYS = {"restarts", "max_evals"}

_SURROGATE_NAMES = {"fixed": "fixed", "deep-projection": "deep", "deep": "deep"}

DEFAULT_SEEDS = list(range(1, 21))


@dataclass
class ExperimentConfig:
    """Validated sweep description; defaults follow the reference recipe."""

    pool_path: str
    pool_format: str
    surrogate: str = "deep"
    acquisition: str = "ei"
    iterations: int = 50
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    init: InitPolicy = field(default_factory=InitPolicy)
    projection_width: int = 64
    dropout: float = 0.1
    train: TrainConfig = field(default_factory=TrainConfig)
    fit_restarts: int = 4
    fit_max_evals: int = 200
    warm_start: bool = False
    coverage_quantile: float = 0.05
    output: str = "out"

    def engine(self) -> EngineConfig:
        return EngineConfig(surrogate=self.surrogate, acquisition=self.acquisition,
                            iterations=self.iterations, init=self.init,
                            projection_width=self.projection_width,
                            dropout=self.dropout, train=self.train,
                            fit_restarts=self.fit_restarts,
                            fit_max_evals=self.fit_max_evals,
                            warm_start=self.warm_start)


def load_experiment_config(path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError on any problem."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_experiment_config(doc, base_dir=path.parent)


def parse_experiment_config(doc: dict, base_dir=None) -> ExperimentConfig:
    _reject_unknown(doc, _TOP_KEYS, "top level")

    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("missing required section 'dataset'")
    _reject_unknown(dataset, _DATASET_KEYS, "dataset")
    if "path" not in dataset:
        raise ConfigError("dataset.path is required")
    pool_path = str(dataset["path"])
    if base_dir is not None and not Path(pool_path).is_absolute():
        pool_path = str(Path(base_dir) / pool_path)
    pool_format = dataset.get("format") or infer_format(pool_path)
    if pool_format not in ("csv", "binary"):
        raise ConfigError(f"dataset.format must be csv or binary, got {pool_format!r}")

    surrogate_raw = doc.get("surrogate", "deep-projection")
    if surrogate_raw not in _SURROGATE_NAMES:
        raise ConfigError(f"surrogate must be one of {sorted(_SURROGATE_NAMES)}, "
                          f"got {surrogate_raw!r}")

    acquisition = doc.get("acquisition", "ei")
    if acquisition not in ("ei", "random"):
        raise ConfigError(f"acquisition must be ei or random, got {acquisition!r}")

    seeds = _parse_seeds(doc.get("seeds"))

    try:
        init = InitPolicy(**_int_values(doc.get("init", {}), _INIT_KEYS, "init",
                                        int_keys={"n_init"}))
        proj = _int_values(doc.get("projection", {}), _PROJECTION_KEYS, "projection",
                           int_keys={"width"})
        train = TrainConfig(**_int_values(doc.get("training", {}), _TRAINING_KEYS,
                                          "training", int_keys={"decay_every", "epochs"}))
        fit = _int_values(doc.get("fit", {}), _FIT_KEYS, "fit",
                          int_keys={"restarts", "max_evals"})
        cfg = ExperimentConfig(
            pool_path=pool_path, pool_format=pool_format,
            surrogate=_SURROGATE_NAMES[surrogate_raw], acquisition=acquisition,
            iterations=_as_int(doc.get("iterations", 50), "iterations"),
            seeds=seeds, init=init,
            projection_width=_as_int(proj.get("width", 64), "projection.width"),
            dropout=float(proj.get("dropout", 0.1)),
            train=train,
            fit_restarts=_as_int(fit.get("restarts", 4), "fit.restarts"),
            fit_max_evals=_as_int(fit.get("max_evals", 200), "fit.max_evals"),
            warm_start=_as_bool(doc.get("warm_start", False), "warm_start"),
            coverage_quantile=float(doc.get("coverage_quantile", 0.05)),
            output=str(doc.get("output", "out")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if not 0.0 < cfg.coverage_quantile <= 1.0:
        raise ConfigError("coverage_quantile must lie in (0, 1]")
    if cfg.iterations < 1:
        raise ConfigError("iterations must be >= 1")
    return cfg


def _reject_unknown(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _parse_seeds(raw) -> list[int]:
    if raw is None:
        return list(DEFAULT_SEEDS)
    if isinstance(raw, dict):
        _reject_unknown(raw, {"start", "stop"}, "seeds")
        start = _as_int(raw.get("start", 1), "seeds.start")
        stop = _as_int(raw.get("stop"), "seeds.stop")
        if stop < start:
            raise ConfigError("seeds.stop must be >= seeds.start")
        return list(range(start, stop + 1))
    if isinstance(raw, list) and raw:
        seeds = [_as_int(s, "seeds entry") for s in raw]
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds must be unique")
        return seeds
    raise ConfigError("seeds must be a non-empty list or {start, stop}")


def _int_values(section, allowed, where, int_keys=()):
    if not isinstance(section, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    _reject_unknown(section, allowed, where)
    out = dict(section)
    for key in int_keys:
        if key in out:
            out[key] = _as_int(out[key], f"{where}.{key}")
    return out


def _as_int(value, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _as_bool(value, where) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where} must be a boolean, got {value!r}")
    return value
