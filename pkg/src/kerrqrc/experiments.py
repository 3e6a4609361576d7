"""Experiment drivers: training-size, dimension, model and noise sweeps.

Every experiment is split into independent work units (one reservoir and one
model family, or one noise level). Units are pure functions of the
configuration, so they can run in any order or in a process pool; rows are
sorted by key before aggregation and output.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from .classical import CLASSICAL_FORMS, RADIUS_FORMS, bloch_from_hv, crc_features, hv_transform
from .integrators import IntegratorConfig, fixed_grid
from .quantum import ReservoirParams, qrc_features
from .readout import TrainingSet, feature_matrix, gamma_sweep, summarize
from .task import (
    MEAN_PARAMS,
    ParameterDistribution,
    TaskConfig,
    add_output_noise,
    parameter_ensemble,
    rng_for,
    sample_times,
    test_phases,
    training_phases,
)

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "train_size_sweep",
    "dimension_sweep",
    "model_comparison",
    "output_noise_sweep",
    "input_noise_sweep",
)
MODELS = ("qrc", "full_qrc", "crc", "full_crc", "hvrc")
QUBIT_ONLY = ("full_qrc", "hvrc")
CLASSICAL = ("crc", "full_crc")
NOISE_EXPERIMENTS = ("output_noise_sweep", "input_noise_sweep")

DEFAULT_TRAIN_SIZES = [2, 5, 10, 20, 30, 50, 75, 100]
DEFAULT_NOISE_GRID = [0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]

_DEFAULT_MODELS = {
    "train_size_sweep": ["qrc", "crc"],
    "dimension_sweep": ["qrc"],
    "model_comparison": ["qrc", "full_qrc", "hvrc", "crc", "full_crc"],
    "output_noise_sweep": ["qrc", "crc"],
    "input_noise_sweep": ["qrc", "crc"],
}
_DEFAULT_DIMS = {
    "train_size_sweep": [12],
    "dimension_sweep": list(range(2, 13)),
    "model_comparison": [2],
    "output_noise_sweep": [12],
    "input_noise_sweep": [12],
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str = "train_size_sweep"
    models: Optional[list] = None
    dims: Optional[list] = None
    train_sizes: Optional[list] = None
    test_size: Optional[int] = None
    n_reservoirs: int = 101
    rel_std: float = 0.10
    seed: int = 0
    noise_grid: list = field(default_factory=lambda: list(DEFAULT_NOISE_GRID))
    classical_form: str = "literal"
    radius_form: str = "literal"
    gamma_mode: str = "test"
    validation_size: int = 500
    slice_train_size: int = 30
    t_signal: float = 2.0
    n_samples: int = 100
    rtol: float = 1e-8
    atol: float = 1e-10
    fixed_dt: Optional[float] = None
    workers: int = 1
    out_dir: str = "results"
    charts: bool = True

    def __post_init__(self):
        exp = self.experiment
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r}; expected one of {EXPERIMENTS}")
        if self.models is None:
            self.models = list(_DEFAULT_MODELS[exp])
        if self.dims is None:
            self.dims = list(_DEFAULT_DIMS[exp])
        if self.train_sizes is None:
            self.train_sizes = [10] if exp in NOISE_EXPERIMENTS else list(DEFAULT_TRAIN_SIZES)
        if self.test_size is None:
            self.test_size = 100 if exp == "input_noise_sweep" else 5000
        if exp in NOISE_EXPERIMENTS:
            self.n_reservoirs = 1
        self.models = [str(m) for m in self.models]
        self.dims = sorted({int(d) for d in self.dims})
        self.train_sizes = sorted({int(m) for m in self.train_sizes})
        self.noise_grid = sorted({float(s) for s in self.noise_grid})
        self.validate()

    def validate(self) -> None:
        bad = [m for m in self.models if m not in MODELS]
        if bad or not self.models:
            raise ConfigError(f"unknown or empty models {bad}; expected a subset of {MODELS}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("models contains duplicates")
        if not self.dims or min(self.dims) < 2:
            raise ConfigError("dims must be a non-empty list of integers >= 2")
        if any(m in QUBIT_ONLY for m in self.models) and self.dims != [2]:
            raise ConfigError("full_qrc and hvrc require dims = [2]")
        if not self.train_sizes or min(self.train_sizes) < 2:
            raise ConfigError("train_sizes must be integers >= 2")
        if self.test_size < 1:
            raise ConfigError("test_size must be >= 1")
        if self.n_reservoirs < 1:
            raise ConfigError("n_reservoirs must be >= 1")
        if self.rel_std < 0:
            raise ConfigError("rel_std must be >= 0")
        if self.classical_form not in CLASSICAL_FORMS:
            raise ConfigError(f"classical_form must be one of {CLASSICAL_FORMS}")
        if self.radius_form not in RADIUS_FORMS:
            raise ConfigError(f"radius_form must be one of {RADIUS_FORMS}")
        if self.gamma_mode not in ("test", "validation"):
            raise ConfigError("gamma_mode must be 'test' or 'validation'")
        if self.validation_size < 1:
            raise ConfigError("validation_size must be >= 1")
        if self.t_signal <= 0 or self.n_samples < 1:
            raise ConfigError("t_signal and n_samples must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if any(s < 0 for s in self.noise_grid):
            raise ConfigError("noise levels must be non-negative")
        exp = self.experiment
        if exp == "train_size_sweep":
            if not {"qrc", "crc"} <= set(self.models):
                raise ConfigError("train_size_sweep needs models qrc and crc")
        if exp == "dimension_sweep":
            if self.models != ["qrc"]:
                raise ConfigError("dimension_sweep runs the qrc model only")
            if max(self.dims) > 12:
                raise ConfigError("dimension_sweep dims must lie in 2..12")
        if exp in NOISE_EXPERIMENTS:
            if any(m in QUBIT_ONLY for m in self.models):
                raise ConfigError("noise sweeps support qrc, crc and full_crc")
            if not self.noise_grid:
                raise ConfigError("noise_grid is empty")
        if exp == "input_noise_sweep":
            try:
                fixed_grid(0.0, self.sample_spacing, self.step_dt)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            limit = min(1 / (50 * MEAN_PARAMS.kappa), 1 / MEAN_PARAMS.drive_freq) / 20
            if self.step_dt > limit * (1 + 1e-12):
                raise ConfigError(f"fixed_dt must be <= {limit:g} for white-noise input")

    @property
    def sample_spacing(self) -> float:
        return self.t_signal / self.n_samples

    @property
    def step_dt(self) -> float:
        return self.fixed_dt if self.fixed_dt is not None else self.sample_spacing / 20

    @property
    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rtol=self.rtol, atol=self.atol, fixed_dt=self.step_dt)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # run manifest
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)


ROW_FIELDS = (
    "experiment",
    "model",
    "variant",
    "dim",
    "train_size",
    "noise_branch",
    "noise_sigma_over_alpha",
    "reservoir",
    "n_out",
    "rms",
    "gamma",
    "dt",
    "input_scale",
    "kerr",
    "kappa",
    "drive_amp",
    "drive_freq",
    "check",
    "status",
)

AGGREGATE_FIELDS = (
    "model",
    "dim",
    "train_size",
    "noise_sigma_over_alpha",
    "rms_mean",
    "rms_std",
    "rms_best",
    "rms_worst",
    "spread_factor",
    "gamma_mode",
)


@dataclass
class Row:
    experiment: str
    model: str
    variant: str
    dim: int
    train_size: int
    noise_branch: str
    noise_sigma_over_alpha: float
    reservoir: int
    n_out: int
    rms: float
    gamma: float
    dt: float
    input_scale: float
    kerr: float
    kappa: float
    drive_amp: float
    drive_freq: float
    check: float
    status: str = "ok"

    @property
    def label(self) -> str:
        """Model name as used in aggregates; noise branches get a suffix."""
        if self.noise_branch in ("output", "input"):
            return f"{self.model}@{self.noise_branch}"
        return self.model

    def sort_key(self):
        return (
            self.model,
            self.dim,
            self.train_size,
            self.noise_branch,
            self.noise_sigma_over_alpha,
            self.reservoir,
        )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    aggregates: list = field(default_factory=list)

    @property
    def n_failed(self) -> int:
        return sum(r.status != "ok" for r in self.rows)

    def select(self, **crit) -> list:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in crit.items())]

    def aggregate_for(self, model: str, dim: int, train_size: int, sigma: float = 0.0):
        for a in self.aggregates:
            if (a["model"], a["dim"], a["train_size"], a["noise_sigma_over_alpha"]) == (
                model,
                dim,
                train_size,
                sigma,
            ):
                return a
        raise KeyError((model, dim, train_size, sigma))


def aggregate_rows(rows, gamma_mode: str) -> list:
    """Per-(model, dim, train_size, noise) statistics over successful rows."""
    groups: dict = {}
    for r in sorted(rows, key=Row.sort_key):
        if r.status != "ok" or not math.isfinite(r.rms):
            continue
        key = (r.label, r.dim, r.train_size, r.noise_sigma_over_alpha)
        groups.setdefault(key, []).append(r.rms)
    out = []
    for (label, dim, m, sigma), values in sorted(groups.items()):
        stats = summarize(values)
        out.append(
            {
                "model": label,
                "dim": dim,
                "train_size": m,
                "noise_sigma_over_alpha": sigma,
                "rms_mean": stats.rms_mean,
                "rms_std": stats.rms_std,
                "rms_best": stats.rms_best,
                "rms_worst": stats.rms_worst,
                "spread_factor": stats.spread_factor,
                "gamma_mode": gamma_mode,
            }
        )
    return out


# -- work units ---------------------------------------------------------------


@dataclass(frozen=True)
class _Unit:
    family: str  # "quantum" or "classical"
    dim: int  # 0 for classical
    reservoir: int
    branch: str = "none"
    sigma: Optional[float] = None  # input-noise level handled by this unit


def _plan(cfg: ExperimentConfig) -> list:
    quantum = [m for m in cfg.models if m not in CLASSICAL]
    classical = [m for m in cfg.models if m in CLASSICAL]
    units = []
    if cfg.experiment in NOISE_EXPERIMENTS:
        branch = "output" if cfg.experiment == "output_noise_sweep" else "input"
        sigmas = cfg.noise_grid if branch == "input" else [None]
        for s in sigmas:
            if quantum:
                units += [_Unit("quantum", d, 0, branch, s) for d in cfg.dims]
            if classical:
                units.append(_Unit("classical", 0, 0, branch, s))
        return units
    for i in range(cfg.n_reservoirs):
        if quantum:
            units += [_Unit("quantum", d, i) for d in cfg.dims]
        if classical:
            units.append(_Unit("classical", 0, i))
    return units


def _phase_sets(cfg: ExperimentConfig):
    """Test, optional validation, and training phases, concatenated in that order."""
    test = test_phases(cfg.test_size, rng_for(cfg.seed, "test"))
    val = (
        test_phases(cfg.validation_size, rng_for(cfg.seed, "validation"))
        if cfg.gamma_mode == "validation"
        else np.empty(0)
    )
    train = {m: training_phases(m) for m in cfg.train_sizes}
    return test, val, train


def _simulate(cfg, unit: _Unit, params: ReservoirParams, phases, noise=None) -> dict:
    """Features for every requested model of the unit's family."""
    times = sample_times(TaskConfig(cfg.t_signal, cfg.n_samples))
    icfg = cfg.integrator
    feats = {}
    if unit.family == "classical":
        both = crc_features(params, phases, times, True, cfg.classical_form, icfg, noise)
        if "crc" in cfg.models:
            feats["crc"] = both[:, :1, :]
        if "full_crc" in cfg.models:
            feats["full_crc"] = both
        return feats
    p = params.with_dim(unit.dim)
    tomo = unit.dim == 2 and any(m in QUBIT_ONLY for m in cfg.models)
    f = qrc_features(p, phases, times, tomo, icfg, noise)
    if not tomo:
        feats["qrc"] = f
        return feats
    if "qrc" in cfg.models:
        # <X> = <sigma_x> / sqrt2 for a qubit.
        feats["qrc"] = f[:, :1, :] / np.sqrt(2)
    if "full_qrc" in cfg.models:
        feats["full_qrc"] = f
    if "hvrc" in cfg.models:
        feats["hvrc"] = hv_transform(f, cfg.radius_form)
        feats["_tomo"] = f
    return feats


def _hv_roundtrip_error(hv: np.ndarray, tomo: np.ndarray, radius_form: str) -> float:
    """Cross-check of the hidden-variable features against the tomography data.

    Largest of: the deviation of ``hv`` from the pointwise map applied afresh,
    and the error of the conventional-radius spherical round trip (the literal
    squared radius is not invertible off the unit sphere). Points on the z axis
    are skipped, as their azimuth carries no information.
    """
    err = float(np.max(np.abs(hv - hv_transform(tomo, radius_form)), initial=0.0))
    conv = hv_transform(tomo, "conventional")
    b = bloch_from_hv((conv[:, 0, :], conv[:, 1, :], conv[:, 2, :]))
    mask = tomo[:, 0, :] ** 2 + tomo[:, 1, :] ** 2 > 0
    for k in range(3):
        err = max(err, float(np.max(np.abs(b[k] - tomo[:, k, :])[mask], initial=0.0)))
    return err


def _fit_rows(cfg, unit, params, model, feats, test, val, train, sigma, dt=0.0, scale=0.0):
    n_t, n_v = test.size, val.size
    f_test = feature_matrix(feats[:n_t])
    validation = None
    if cfg.gamma_mode == "validation":
        validation = (feature_matrix(feats[n_t:n_t + n_v]), val)
    check = 0.0
    variant = ""
    if model in CLASSICAL:
        variant = cfg.classical_form
    elif model == "hvrc":
        variant = cfg.radius_form
    rows = []
    offset = n_t + n_v
    for m in cfg.train_sizes:
        ts = TrainingSet.from_batch(train[m], feats[offset:offset + m])
        offset += m
        base = dict(
            experiment=cfg.experiment,
            model=model,
            variant=variant,
            dim=unit.dim,
            train_size=m,
            noise_branch=unit.branch,
            noise_sigma_over_alpha=float(sigma),
            reservoir=unit.reservoir,
            n_out=int(feats.shape[1]),
            dt=float(dt),
            input_scale=float(scale),
            kerr=params.kerr,
            kappa=params.kappa,
            drive_amp=params.drive_amp,
            drive_freq=params.drive_freq,
            check=check,
        )
        try:
            w, rms = gamma_sweep(ts, f_test, test, validation=validation)
            rows.append(Row(rms=rms, gamma=w.gamma, **base))
        except Exception as exc:  # isolate failures per row
            rows.append(Row(rms=math.nan, gamma=math.nan, status=f"failed: {exc}", **base))
    return rows


def _failed_rows(cfg, unit, params, exc) -> list:
    models = [m for m in cfg.models if (m in CLASSICAL) == (unit.family == "classical")]
    sigmas = (
        [unit.sigma]
        if unit.sigma is not None
        else (cfg.noise_grid if unit.branch == "output" else [0.0])
    )
    rows = []
    for model in models:
        for m in cfg.train_sizes:
            for s in sigmas:
                rows.append(
                    Row(
                        cfg.experiment, model, "", unit.dim, m, unit.branch, float(s),
                        unit.reservoir, 0, math.nan, math.nan, 0.0, 0.0,
                        params.kerr, params.kappa, params.drive_amp, params.drive_freq,
                        0.0, f"failed: {type(exc).__name__}: {exc}",
                    )
                )
    return rows


def run_unit(cfg_dict: dict, unit: _Unit) -> list:
    """Execute one work unit; module-level so it can be sent to a process pool."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    dist = ParameterDistribution(MEAN_PARAMS, cfg.rel_std, cfg.n_reservoirs)
    params = parameter_ensemble(dist, cfg.seed)[unit.reservoir]
    test, val, train = _phase_sets(cfg)
    phases = np.concatenate([test, val] + [train[m] for m in cfg.train_sizes])
    try:
        if unit.branch == "input":
            return _run_input_noise(cfg, unit, params, phases, test, val, train)
        feats = _simulate(cfg, unit, params, phases)
    except Exception as exc:
        log.warning("unit %s failed: %s", unit, exc)
        return _failed_rows(cfg, unit, params, exc)

    rows = []
    tomo = feats.pop("_tomo", None)
    for model, f in feats.items():
        if unit.branch == "output":
            for s in cfg.noise_grid:
                # Same stream at every level: the noise realisation is common
                # to all levels and only its scale changes.
                rng = rng_for(cfg.seed, "output_noise", model, unit.dim)
                noisy = add_output_noise(f, s * params.drive_amp, rng)
                rows += _fit_rows(cfg, unit, params, model, noisy, test, val, train, s)
        else:
            new = _fit_rows(cfg, unit, params, model, f, test, val, train, 0.0)
            if model == "hvrc" and tomo is not None:
                err = _hv_roundtrip_error(f, tomo, cfg.radius_form)
                for r in new:
                    r.check = err
            rows += new
    return rows


def _run_input_noise(cfg, unit, params, phases, test, val, train) -> list:
    dt = cfg.step_dt
    n_steps = fixed_grid(0.0, cfg.t_signal, dt)
    sigma_step = unit.sigma * params.drive_amp
    if sigma_step == 0:
        # Noise-free dynamics: use the adaptive path so this level reproduces
        # the noiseless baseline exactly. dt = 0 marks the adaptive rows.
        noise, dt = None, 0.0
    else:
        rng = rng_for(cfg.seed, "input_noise", unit.family, unit.dim)
        noise = sigma_step * rng.standard_normal((n_steps, phases.size))
    feats = _simulate(cfg, unit, params, phases, noise)
    feats.pop("_tomo", None)
    rows = []
    for model, f in feats.items():
        rows += _fit_rows(
            cfg, unit, params, model, f, test, val, train, unit.sigma,
            dt=dt, scale=sigma_step / math.sqrt(cfg.step_dt),
        )
    return rows


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every work unit of ``cfg`` and aggregate.

    The row set does not depend on ``cfg.workers``.
    """
    units = _plan(cfg)
    cfg_dict = cfg.to_dict()
    log.info("%s: %d work units, %d workers", cfg.experiment, len(units), cfg.workers)
    if cfg.workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(run_unit, [cfg_dict] * len(units), units))
    else:
        chunks = [run_unit(cfg_dict, u) for u in units]
    rows = sorted((r for chunk in chunks for r in chunk), key=Row.sort_key)
    return ExperimentResult(cfg, rows, aggregate_rows(rows, cfg.gamma_mode))


def _with_experiment(cfg: ExperimentConfig, name: str) -> ExperimentConfig:
    if cfg.experiment == name:
        return cfg
    data = cfg.to_dict()
    data["experiment"] = name
    return ExperimentConfig.from_dict(data)


def run_train_size_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    return run_experiment(_with_experiment(cfg, "train_size_sweep"))


def run_dimension_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    return run_experiment(_with_experiment(cfg, "dimension_sweep"))


def run_model_comparison(cfg: ExperimentConfig) -> ExperimentResult:
    return run_experiment(_with_experiment(cfg, "model_comparison"))


def run_noise_sweeps(cfg: ExperimentConfig) -> tuple[ExperimentResult, ExperimentResult]:
    """Output-noise and input-noise branches with otherwise identical settings.

    ``cfg.test_size`` applies to the output branch; the input branch always
    uses 100 test phases unless ``cfg`` itself is an input-noise config.
    """
    out_cfg = _with_experiment(cfg, "output_noise_sweep")
    data = cfg.to_dict()
    data["experiment"] = "input_noise_sweep"
    if cfg.experiment != "input_noise_sweep":
        data["test_size"] = 100
    in_cfg = ExperimentConfig.from_dict(data)
    return run_experiment(out_cfg), run_experiment(in_cfg)


def manifest(cfg: ExperimentConfig) -> dict:
    import numpy
    import scipy

    return {
        "software": "kerrqrc",
        "version": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
    }
