"""Experiment configuration: training hyperparameters and strict JSON parsing.

``parse_config`` accepts a JSON object, rejects unknown keys, validates every
value with a path-precise message, and fills defaults that depend on the
experiment kind (and, for the synthetic runs, on the generator kind).  The
full schema is documented in docs/config_schema.md.
"""

import json
import os
from dataclasses import dataclass, field, fields as dc_fields

from .errors import ConfigError

__all__ = ["TrainConfig", "ExperimentConfig", "parse_config", "parse_config_dict",
           "config_to_dict", "EXPERIMENT_KINDS", "PSI_KINDS"]

EXPERIMENT_KINDS = ("gen-data", "train-dr", "sweep", "train-classifier",
                    "mnist-ablation", "analyze")
PSI_KINDS = ("linear", "quadratic", "neuralnet")
ANALYSIS_KINDS = ("permutation", "cka")
ACTIVATIONS = ("identity", "relu", "leaky_relu", "elu", "tanh", "sigmoid", "sine")
OPTIMIZERS = ("adam", "sgd")


@dataclass
class TrainConfig:
    """Optimization settings shared by every training loop."""

    optimizer: str = "adam"
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0
    lam: float = 0.01
    epochs: int = 2000
    cold_start: int = 0
    seed: int = 0
    batch_size: int | None = None       # None = full batch
    noise_rho: float = 0.0
    lr_decay: bool = False

    def validate(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got '{self.optimizer}'")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0 or self.lam < 0 or self.noise_rho < 0:
            raise ConfigError("weight_decay, lam and noise_rho must be >= 0")
        if self.epochs < 1 or self.cold_start < 0:
            raise ConfigError("epochs must be >= 1 and cold_start >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        return self

    def make_optimizer(self, params):
        from .engine.optim import SGD, Adam
        if self.optimizer == "sgd":
            return SGD(params, lr=self.lr, momentum=self.momentum,
                       weight_decay=self.weight_decay)
        return Adam(params, lr=self.lr, weight_decay=self.weight_decay)


# ---------------------------------------------------------------------------
# Experiment configuration schema
# ---------------------------------------------------------------------------

def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _pos(v):
    return _is_num(v) and v > 0


def _nonneg(v):
    return _is_num(v) and v >= 0


def _pos_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _nonneg_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _num_list(check):
    def ok(v):
        return isinstance(v, list) and len(v) > 0 and all(check(x) for x in v)
    return ok


def _opt_str(v):
    return v is None or isinstance(v, str)


# (validator, description, applicable kinds, default) ; callable defaults get
# the partially resolved config dict.  Synthetic-run defaults depend on the
# generator kind.
_DR_DEFAULTS = {
    "linear": dict(lr=0.01, l2=1e-6, epochs=2000, lam=0.01, beta0=1.0),
    "quadratic": dict(lr=0.01, l2=1e-6, epochs=5000, lam=0.01, beta0=5.0),
    "neuralnet": dict(lr=0.001, l2=0.0, epochs=10000, lam=0.1, beta0=1.0),
}

_ALL = EXPERIMENT_KINDS
_DR = ("gen-data", "train-dr", "sweep")
_TRAIN_DR = ("train-dr", "sweep")
_CLS = ("train-classifier", "analyze")
_ABL = ("mnist-ablation",)
_MNIST = ("train-classifier", "analyze", "mnist-ablation")


def _by_kind(key, cls_default, abl_default):
    def default(cfg):
        if cfg["kind"] in _TRAIN_DR:
            return _DR_DEFAULTS[cfg["psi"]][key]
        if cfg["kind"] in _CLS:
            return cls_default
        return abl_default
    return default


_SCHEMA = {
    # key: (validator, description, kinds, default)
    "kind": (lambda v: v in EXPERIMENT_KINDS, f"one of {EXPERIMENT_KINDS}", _ALL, None),
    "seed": (_nonneg_int, "integer >= 0", _ALL, 0),
    "out_dir": (lambda v: isinstance(v, str) and v != "", "non-empty string", _ALL, "out"),
    "k": (_pos, "number > 0", _ALL, 5.0),
    "alpha": (_pos, "number > 0", _ALL, 1.0),

    "psi": (lambda v: v in PSI_KINDS, f"one of {PSI_KINDS}", _DR, "linear"),
    "r": (_pos_int, "integer >= 1", _DR, 5),
    "d": (_pos_int, "integer >= 1", _DR, lambda cfg: 2 * cfg["r"]),
    "n_samples": (_pos_int, "integer >= 1", _DR, 1000),
    "n": (_pos_int, "integer >= 1", _DR,
          lambda cfg: {"linear": 30, "quadratic": 15, "neuralnet": 20}[cfg["psi"]]),

    "lr": (_pos, "number > 0", _TRAIN_DR + _CLS + _ABL, _by_kind("lr", 0.05, 0.001)),
    "l2": (_nonneg, "number >= 0", _TRAIN_DR + _CLS + _ABL, _by_kind("l2", 1e-3, 0.0)),
    "lam": (_nonneg, "number >= 0", _TRAIN_DR + _CLS, _by_kind("lam", 0.4, None)),
    "epochs": (_pos_int, "integer >= 1", _TRAIN_DR + _CLS + _ABL, _by_kind("epochs", 60, 100)),
    "beta0": (_is_num, "number", _TRAIN_DR + _CLS + _ABL, _by_kind("beta0", 1.0, 1.0)),
    "cold_start": (_nonneg_int, "integer >= 0", _TRAIN_DR + _CLS + _ABL,
                   lambda cfg: 20 if cfg["kind"] in _CLS else 0),
    "optimizer": (lambda v: v in OPTIMIZERS, f"one of {OPTIMIZERS}", _TRAIN_DR + _CLS + _ABL,
                  lambda cfg: "sgd" if cfg["kind"] in _CLS else "adam"),
    "momentum": (_nonneg, "number >= 0", _TRAIN_DR + _CLS + _ABL, 0.9),
    "batch_size": (lambda v: v is None or _pos_int(v), "null or integer >= 1",
                   _TRAIN_DR + _CLS + _ABL,
                   lambda cfg: None if cfg["kind"] in _TRAIN_DR else (128 if cfg["kind"] in _CLS else 256)),
    "runs": (lambda v: isinstance(v, int) and v >= 2, "integer >= 2", ("analyze",), 5),

    "lrs": (_num_list(_pos), "non-empty list of numbers > 0", ("sweep",),
            lambda cfg: [1e-4, 1e-3, 1e-2, 1e-1]),
    "lams": (_num_list(_nonneg), "non-empty list of numbers >= 0", ("sweep",),
             lambda cfg: [0.001, 0.01, 0.1]),
    "beta0s": (_num_list(_is_num), "non-empty list of numbers", ("sweep",),
               lambda cfg: [1.0, 5.0]),

    "widths": (_num_list(_pos_int), "non-empty list of integers >= 1", _CLS,
               lambda cfg: [784, 256, 128, 10]),
    "activation": (lambda v: v in ACTIVATIONS, f"one of {ACTIVATIONS}", _CLS, "relu"),
    "noise_rho": (_nonneg, "number >= 0", _CLS, 0.0),
    "lr_decay": (lambda v: isinstance(v, bool), "boolean", _CLS, True),
    "analysis": (lambda v: v in ANALYSIS_KINDS, f"one of {ANALYSIS_KINDS}", ("analyze",),
                 "permutation"),
    "cka_layer": (_nonneg_int, "integer >= 0", ("analyze",), 0),

    "lambdas_dam": (_num_list(_nonneg), "non-empty list of numbers >= 0", _ABL,
                    lambda cfg: [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0]),
    "lambdas_l1": (_num_list(_nonneg), "non-empty list of numbers >= 0", _ABL,
                   lambda cfg: [0.01, 0.1, 1.0, 5.0, 10.0, 25.0]),
    "eps_thr": (_pos, "number > 0", _ABL, 1e-3),

    "subset": (_pos_int, "integer >= 1", _MNIST, 10000),
    "synthetic_data": (lambda v: isinstance(v, bool), "boolean", _MNIST, True),
    "mnist_images": (_opt_str, "null or string path", _MNIST, None),
    "mnist_labels": (_opt_str, "null or string path", _MNIST, None),
    "mnist_test_images": (_opt_str, "null or string path", _MNIST, None),
    "mnist_test_labels": (_opt_str, "null or string path", _MNIST, None),
}


@dataclass
class ExperimentConfig:
    """Fully resolved experiment configuration (one field per schema key)."""

    kind: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        values = object.__getattribute__(self, "values")
        if name in values:
            return values[name]
        raise AttributeError(name)

    def train_config(self, seed=None, lam=None, lr=None, beta0=None) -> TrainConfig:
        v = self.values
        return TrainConfig(
            optimizer=v["optimizer"], lr=lr if lr is not None else v["lr"],
            momentum=v.get("momentum", 0.9), weight_decay=v["l2"],
            lam=lam if lam is not None else v.get("lam", 0.0),
            epochs=v["epochs"], cold_start=v["cold_start"],
            seed=seed if seed is not None else v["seed"],
            batch_size=v["batch_size"], noise_rho=v.get("noise_rho", 0.0),
            lr_decay=v.get("lr_decay", False),
        ).validate()


def _keys_for(kind):
    return [key for key, (_, _, kinds, _) in _SCHEMA.items() if kind in kinds]


def parse_config_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"config: expected a JSON object, got {type(raw).__name__}")
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("config.kind: missing (required)")
    validator, desc, _, _ = _SCHEMA["kind"]
    if not validator(kind):
        raise ConfigError(f"config.kind: must be {desc}, got {kind!r}")

    allowed = _keys_for(kind)
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"config: unknown key '{key}' for kind '{kind}'")

    resolved = {"kind": kind}
    for key in allowed:
        if key == "kind":
            continue
        validator, desc, _, default = _SCHEMA[key]
        if key in raw:
            value = raw[key]
            if not validator(value):
                raise ConfigError(f"config.{key}: must be {desc}, got {value!r}")
        else:
            value = default(resolved) if callable(default) else default
        resolved[key] = value

    # cross-field constraints
    if kind in _DR:
        if resolved["d"] <= resolved["r"]:
            raise ConfigError(f"config.d: must exceed r (d={resolved['d']}, r={resolved['r']})")
        if resolved["n_samples"] < resolved["d"]:
            raise ConfigError(
                f"config.n_samples: must be >= d (n_samples={resolved['n_samples']}, d={resolved['d']})")
        if kind in _TRAIN_DR and resolved["n"] <= resolved["r"]:
            raise ConfigError(f"config.n: bottleneck must exceed r (n={resolved['n']}, r={resolved['r']})")
    if kind in _CLS and len(resolved["widths"]) < 3:
        raise ConfigError("config.widths: need at least input, one hidden and output width")
    return ExperimentConfig(kind=kind, values=resolved)


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: malformed JSON in {path}: {exc}") from exc
    return parse_config_dict(raw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Stable dict of every resolved field; parses back to an equal config."""
    return dict(cfg.values)


def resolve_out_dir(cfg: ExperimentConfig) -> str:
    """Output directory, overridable with the DAMLAB_OUT_DIR environment variable."""
    return os.environ.get("DAMLAB_OUT_DIR") or cfg.values["out_dir"]
