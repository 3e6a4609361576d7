"""Sine-phase estimation task: signals, phase sets, parameter ensembles, noise.

Random streams are derived from a root seed plus a key tuple with
:func:`rng_for`, so a draw depends only on what it is for and never on the
order in which work is executed.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quantum import ReservoirParams, build_quadratures

__all__ = [
    "MEAN_PARAMS",
    "TaskConfig",
    "NoiseConfig",
    "ParameterDistribution",
    "rng_for",
    "make_signal",
    "sample_times",
    "training_phases",
    "test_phases",
    "add_output_noise",
    "input_noise",
    "sample_parameters",
    "parameter_ensemble",
    "write_parameters_csv",
    "read_parameters_csv",
    "measurement_uncertainty",
    "repeated_uncertainty",
]

MEAN_PARAMS = ReservoirParams(kerr=-2.0, kappa=1.0, drive_amp=6.0, drive_freq=10.0, dim=12)


def rng_for(seed: int, *key) -> np.random.Generator:
    """Generator for the stream named by ``key`` under the root ``seed``.

    String parts of the key are hashed to integers so they can be used as
    spawn keys.
    """
    words = []
    for part in key:
        if isinstance(part, str):
            words.append(int.from_bytes(hashlib.sha256(part.encode()).digest()[:4], "little"))
        else:
            words.append(int(part))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(words)))


@dataclass(frozen=True)
class TaskConfig:
    t_signal: float = 2.0
    n_samples: int = 100
    phase_interval: tuple[float, float] = (0.0, np.pi / 2)
    train_size: int = 30
    test_size: int = 5000

    @property
    def sample_spacing(self) -> float:
        return self.t_signal / self.n_samples


@dataclass(frozen=True)
class NoiseConfig:
    """Noise levels.

    ``output_sigma`` is in units of the drive amplitude. ``input_scale`` is the
    spectral amplitude ``s``; the per-step standard deviation is
    ``s * sqrt(dt)``.
    """

    output_sigma: float = 0.0
    input_scale: float = 0.0
    seed: int = 0

    def step_sigma(self, dt: float) -> float:
        return self.input_scale * np.sqrt(dt)


@dataclass(frozen=True)
class ParameterDistribution:
    means: ReservoirParams = field(default_factory=lambda: MEAN_PARAMS)
    rel_std: float = 0.10
    count: int = 101


def make_signal(phase: float, params: ReservoirParams) -> Callable[[float], float]:
    """Drive ``u(t) = alpha sin(omega_u t + phase)``."""
    alpha, omega = params.drive_amp, params.drive_freq

    def u(t):
        return alpha * np.sin(omega * np.asarray(t) + phase)

    return u


def sample_times(task: TaskConfig = TaskConfig()) -> np.ndarray:
    """Output grid ``t_k = k * t_signal / n_samples`` for ``k = 1..n_samples``."""
    return task.sample_spacing * np.arange(1, task.n_samples + 1)


def training_phases(m: int, interval=(0.0, np.pi / 2)) -> np.ndarray:
    """``m`` equidistant phases spanning the interval, both endpoints included."""
    if m < 2:
        raise ValueError("need at least 2 training phases")
    return np.linspace(interval[0], interval[1], m)


def test_phases(t: int, seed, interval=(0.0, np.pi / 2)) -> np.ndarray:
    """``t`` uniform random phases; ``seed`` is an int or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(interval[0], interval[1], size=t)


def add_output_noise(features, sigma_abs: float, rng: np.random.Generator):
    """Add i.i.d. N(0, sigma_abs^2) noise to every sampled value.

    Accepts a :class:`FeatureSeries` or an array; returns the same kind. A zero
    ``sigma_abs`` returns the input values unchanged without consuming draws.
    """
    from .quantum import FeatureSeries

    if sigma_abs < 0:
        raise ValueError("noise standard deviation must be non-negative")
    if isinstance(features, FeatureSeries):
        return FeatureSeries(features.times, add_output_noise(features.values, sigma_abs, rng))
    values = np.asarray(features, dtype=float)
    if sigma_abs == 0:
        return values.copy()
    return values + sigma_abs * rng.standard_normal(values.shape)


def input_noise(n_steps: int, n_traj: int, sigma_step: float, rng: np.random.Generator) -> np.ndarray:
    """Per-step drive noise, shape ``(n_steps, n_traj)``, std ``sigma_step``."""
    return sigma_step * rng.standard_normal((n_steps, n_traj))


def _positive_normal(rng, mean, std):
    while True:
        v = rng.normal(mean, std)
        if v > 0:
            return v


def sample_parameters(dist: ParameterDistribution, rng: np.random.Generator) -> list[ReservoirParams]:
    """``dist.count`` Gaussian draws around ``dist.means``.

    Each scalar has standard deviation ``rel_std * |mean|``. ``kappa``, the drive
    amplitude and the drive frequency are redrawn until positive.
    """
    m = dist.means
    s = dist.rel_std
    out = []
    for _ in range(dist.count):
        kerr = rng.normal(m.kerr, s * abs(m.kerr))
        kappa = _positive_normal(rng, m.kappa, s * abs(m.kappa))
        alpha = _positive_normal(rng, m.drive_amp, s * abs(m.drive_amp))
        omega = _positive_normal(rng, m.drive_freq, s * abs(m.drive_freq))
        out.append(ReservoirParams(kerr, kappa, alpha, omega, m.dim))
    return out


def parameter_ensemble(dist: ParameterDistribution, seed: int) -> list[ReservoirParams]:
    """Ensemble with the mean parameters at index 0 and random draws after it.

    Reservoir ``i > 0`` is drawn from its own stream, so the first ``n`` members
    do not depend on ``dist.count``.
    """
    one = ParameterDistribution(dist.means, dist.rel_std, 1)
    members = [dist.means]
    for i in range(1, dist.count):
        members.extend(sample_parameters(one, rng_for(seed, "params", i)))
    return members


def write_parameters_csv(params: Sequence[ReservoirParams], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "kerr", "kappa", "drive_amp", "drive_freq"])
        for i, p in enumerate(params):
            writer.writerow([i] + [repr(float(v)) for v in (p.kerr, p.kappa, p.drive_amp, p.drive_freq)])


def read_parameters_csv(path, dim: int = 12) -> list[ReservoirParams]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["index"]))
    return [
        ReservoirParams(float(r["kerr"]), float(r["kappa"]), float(r["drive_amp"]), float(r["drive_freq"]), dim)
        for r in rows
    ]


def measurement_uncertainty(rho) -> float:
    """Standard deviation of the X quadrature in state ``rho``."""
    rho = np.asarray(rho)
    x, _ = build_quadratures(rho.shape[-1])
    mean = np.trace(rho @ x).real
    second = np.trace(rho @ x @ x).real
    return float(np.sqrt(max(second - mean * mean, 0.0)))


def repeated_uncertainty(delta: float, repetitions: int) -> float:
    """Standard error after averaging ``repetitions`` single-shot outcomes."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    return delta / np.sqrt(repetitions)
