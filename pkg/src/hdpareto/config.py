"""Strict JSON experiment configurations.

Each CLI subcommand reads one JSON object.  Keys must name fields of that
subcommand's config class; unknown keys, wrong types and out-of-range values
raise ``ConfigError``.  Omitted fields take the defaults below, and the fully
resolved config is echoed into ``summary.json``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


class ExperimentKind(str, enum.Enum):
    SYNTH_SWEEP = "synth-sweep"
    FRONT_COMPARE = "front-compare"
    FAIRNESS_RUN = "fairness-run"
    ADVERSARIAL_CONTRAST = "adversarial-contrast"
    HV_REPORT = "hv-report"


FRONT_METHODS = ("two_stage", "direct_regularized", "plug_in", "hypernetwork_ts", "hypernetwork_dr")


@dataclass(frozen=True)
class _Base:
    repeats: int = 1
    base_seed: int = 0
    output_dir: str = ""

    def validate(self) -> None:
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")

    def seeds(self) -> list[int]:
        """Repeat r runs with seed base_seed + r."""
        return [self.base_seed + r for r in range(self.repeats)]


def _check_lambda_pair(lam, name="lam"):
    if len(lam) != 2 or min(lam) < 0 or abs(sum(lam) - 1.0) > 1e-12:
        raise ConfigError(f"{name} must be two non-negative weights summing to 1")


def _check_spectrum(spectrum, rank, d):
    if spectrum not in ("uniform", "spiked"):
        raise ConfigError("spectrum must be 'uniform' or 'spiked'")
    if spectrum == "spiked" and not 0 <= rank <= d:
        raise ConfigError("spike_rank must lie in [0, d]")


def _check_penalty(p):
    if p != "holdout" and not (isinstance(p, (int, float)) and not isinstance(p, bool) and p >= 0):
        raise ConfigError('stage1_penalty must be "holdout" or a non-negative constant')


@dataclass(frozen=True)
class SynthSweepConfig(_Base):
    repeats: int = 10
    d: int = 50
    n: int = 15
    sparsities: tuple = (5, 15, 25, 35, 45)
    unlabeled: tuple = (15, 24, 32, 41, 50)
    lam: tuple = (0.5, 0.5)
    noise_sd: float = 0.25
    penalty_const: float = 1.0
    cov_min: float = 0.5
    cov_max: float = 2.0

    def validate(self):
        super().validate()
        if not self.sparsities or not self.unlabeled:
            raise ConfigError("sparsities and unlabeled must be non-empty")
        if any(not 1 <= s <= self.d for s in self.sparsities):
            raise ConfigError("every sparsity must lie in [1, d]")
        if any(N < 0 for N in self.unlabeled) or self.n < 1:
            raise ConfigError("need n >= 1 and unlabeled sizes >= 0")
        _check_lambda_pair(self.lam)
        if self.noise_sd < 0 or self.penalty_const < 0 or not 0 < self.cov_min <= self.cov_max:
            raise ConfigError("need noise_sd >= 0, penalty_const >= 0, 0 < cov_min <= cov_max")


@dataclass(frozen=True)
class FrontCompareConfig(_Base):
    repeats: int = 50
    d: int = 80
    n: int = 25
    N: int = 60
    sparsity: int = 1
    noise_sd: float = 0.5
    cov_min: float = 0.05
    cov_max: float = 20.0
    spectrum: str = "spiked"
    spike_rank: int = 10
    grid_size: int = 10
    include_midpoint: bool = True
    methods: tuple = FRONT_METHODS
    stage1_penalty: object = "holdout"
    hypernet_steps: int = 2000
    plug_in_max_iter: int = 2000
    solver_max_iter: int = 100_000
    solver_tol: float = 1e-6

    def validate(self):
        super().validate()
        if self.n < 2 or self.N < 0 or not 1 <= self.sparsity <= self.d:
            raise ConfigError("need n >= 2, N >= 0 and 1 <= sparsity <= d")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be >= 2")
        bad = set(self.methods) - set(FRONT_METHODS)
        if bad or not self.methods:
            raise ConfigError(f"unknown methods {sorted(bad)}; choose from {FRONT_METHODS}")
        _check_penalty(self.stage1_penalty)
        if self.noise_sd < 0 or not 0 < self.cov_min <= self.cov_max:
            raise ConfigError("need noise_sd >= 0 and 0 < cov_min <= cov_max")
        if self.hypernet_steps < 1 or self.plug_in_max_iter < 1 or self.solver_max_iter < 1:
            raise ConfigError("hypernet_steps, plug_in_max_iter and solver_max_iter must be >= 1")
        _check_spectrum(self.spectrum, self.spike_rank, self.d)
        if not self.solver_tol > 0:
            raise ConfigError("solver_tol must be positive")


@dataclass(frozen=True)
class FairnessConfig(_Base):
    repeats: int = 20
    dataset: str = "synthetic"  # "synthetic", a preset name, or "csv"
    csv_path: str = ""
    target_column: str = "target"
    group_column: str = "group"
    drop_columns: tuple = ()
    positive_group_value: str = "1"
    n_labeled: int = 0  # 0: preset value
    n_unlabeled: int = 0
    noise_features: int = -1  # -1: preset value
    standardize_on: str = "train"
    d: int = 200
    sparsity: int = 5
    n: int = 100
    N: int = 400
    n_test: int = 2000
    noise_sd: float = 0.5
    mu_norm: float = 1.0
    grid_size: int = 10
    include_midpoint: bool = True
    stage1_penalty: object = "holdout"
    risk_scale: float = 1.0
    solver_max_iter: int = 2000
    solver_tol: float = 1e-10

    def validate(self):
        super().validate()
        from .dataio import PRESETS

        if self.dataset not in ("synthetic", "csv", *PRESETS):
            raise ConfigError(f"dataset must be 'synthetic', 'csv' or one of {sorted(PRESETS)}")
        if self.dataset != "synthetic":
            if not self.csv_path:
                raise ConfigError("csv_path is required for a CSV-backed dataset")
            if not Path(self.csv_path).is_file():
                raise ConfigError(f"dataset file not found: {self.csv_path}")
            if self.dataset == "csv" and self.n_labeled < 1:
                raise ConfigError("dataset 'csv' needs n_labeled >= 1")
        if self.standardize_on not in ("train", "labeled"):
            raise ConfigError("standardize_on must be 'train' or 'labeled'")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be >= 2")
        if min(self.n, self.n_test) < 2 or self.N < 0 or not 1 <= self.sparsity <= self.d:
            raise ConfigError("need n, n_test >= 2, N >= 0 and 1 <= sparsity <= d")
        if self.noise_sd < 0 or self.mu_norm < 0 or self.risk_scale <= 0:
            raise ConfigError("need noise_sd >= 0, mu_norm >= 0 and risk_scale > 0")
        if self.solver_max_iter < 1 or not self.solver_tol > 0:
            raise ConfigError("need solver_max_iter >= 1 and solver_tol > 0")
        _check_penalty(self.stage1_penalty)


@dataclass(frozen=True)
class AdversarialConfig(_Base):
    repeats: int = 20
    d: int = 64
    n: int = 80
    gamma: float = 2.0
    noise_sd: float = 0.5
    lam: tuple = (0.5, 0.5)

    def validate(self):
        super().validate()
        if self.n < self.d or self.d < 2:
            raise ConfigError("fixed design needs n >= d >= 2")
        if not self.gamma > 1 or self.noise_sd < 0:
            raise ConfigError("need gamma > 1 and noise_sd >= 0")
        _check_lambda_pair(self.lam)
        if min(self.lam) <= 0:
            raise ConfigError("both weights must be positive")


@dataclass(frozen=True)
class HvReportConfig(_Base):
    repeats: int = 5
    d: int = 10
    n: int = 60
    N: int = 200
    sparsity: int = 3
    noise_sd: float = 0.5
    cov_min: float = 0.5
    cov_max: float = 2.0
    grid_size: int = 10
    mc_samples: int = 100_000
    reference: float = 0.0  # 0: twice the largest value on the true front

    def validate(self):
        super().validate()
        if self.n < 2 or self.N < 0 or not 1 <= self.sparsity <= self.d:
            raise ConfigError("need n >= 2, N >= 0 and 1 <= sparsity <= d")
        if self.grid_size < 2 or self.mc_samples < 1 or self.reference < 0:
            raise ConfigError("need grid_size >= 2, mc_samples >= 1, reference >= 0")


CONFIG_CLASSES = {
    ExperimentKind.SYNTH_SWEEP: SynthSweepConfig,
    ExperimentKind.FRONT_COMPARE: FrontCompareConfig,
    ExperimentKind.FAIRNESS_RUN: FairnessConfig,
    ExperimentKind.ADVERSARIAL_CONTRAST: AdversarialConfig,
    ExperimentKind.HV_REPORT: HvReportConfig,
}


def _coerce(name: str, value, default):
    """Check ``value`` against the type of the field's default."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str) and name != "stage1_penalty":
        ok = isinstance(value, str)
    elif isinstance(default, tuple):
        ok = isinstance(value, list)
        if ok:
            proto = default[0] if default else ""
            value = tuple(_coerce(f"{name}[{i}]", v, proto) for i, v in enumerate(value))
    else:
        ok = True
    if not ok:
        raise ConfigError(f"field {name!r}: expected {type(default).__name__}, got {json.dumps(value)}")
    return value


def parse_config(raw: dict, kind: ExperimentKind):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    declared = raw.pop("kind", kind.value)
    if declared != kind.value:
        raise ConfigError(f"config declares kind {declared!r} but subcommand is {kind.value!r}")
    cls = CONFIG_CLASSES[kind]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config keys for {kind.value}: {unknown}")
    values = {name: _coerce(name, v, fields[name].default) for name, v in raw.items()}
    cfg = cls(**values)
    cfg.validate()
    return cfg


def _reject_constant(token: str):
    raise ConfigError(f"non-finite number {token} is not valid JSON")


def load_config(path, kind: ExperimentKind):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return parse_config(raw, kind)


def resolved(cfg) -> dict:
    """All fields including defaults, JSON-ready."""
    out = {"kind": next(k.value for k, c in CONFIG_CLASSES.items() if isinstance(cfg, c))}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out
