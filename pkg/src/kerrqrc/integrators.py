"""Explicit Runge-Kutta integrators used by the reservoir simulations.

Two routines are provided:

* :func:`integrate_adaptive` -- Dormand-Prince 5(4) pair with error control.
  Steps are clipped so that every requested sample time is landed on exactly.
* :func:`integrate_fixed_noisy` -- classical 4-stage scheme on a fixed grid,
  with one externally supplied noise value per step held constant across the
  stages of that step (zero-order hold), so the scheme never looks ahead.

States are numpy arrays of any shape. Complex states are integrated through a
flat real view with real and imaginary parts interleaved, and the error norm
is the maximum over those real components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

__all__ = [
    "IntegratorConfig",
    "IntegrationError",
    "integrate_adaptive",
    "integrate_fixed_noisy",
    "fixed_grid",
]


class IntegrationError(RuntimeError):
    """Raised when an integration cannot reach the requested time."""


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    fixed_dt: Optional[float] = None
    max_steps: int = 1_000_000
    min_step: float = 1e-14

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.fixed_dt is not None and self.fixed_dt <= 0:
            raise ValueError("fixed_dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A_ROWS = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
# 5th order weights minus embedded 4th order weights.
_E = np.array([
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
])
_A = [np.array(row, dtype=float) for row in _A_ROWS]
# Nonzero pattern of each row, so the kernels skip zero coefficients.
_A_IDX = [np.flatnonzero(row) for row in _A]
_A_NZ = [row[idx] for row, idx in zip(_A, _A_IDX)]
_E_IDX = np.flatnonzero(_E)
_E_NZ = _E[_E_IDX]

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@njit(cache=True, fastmath=True)
def _combine(y, hc, idx, ks, out):
    # out = y + sum_j hc[j] * ks[idx[j]] in one pass over flat real arrays
    n = idx.size
    for i in range(y.size):
        acc = y[i]
        for j in range(n):
            acc += hc[j] * ks[idx[j], i]
        out[i] = acc


@njit(cache=True, fastmath=True)
def _error_norm(hc, idx, ks, y, y_new, rtol, atol):
    worst = 0.0
    n = idx.size
    for i in range(y.size):
        e = 0.0
        for j in range(n):
            e += hc[j] * ks[idx[j], i]
        r = abs(e) / (atol + rtol * max(abs(y[i]), abs(y_new[i])))
        if r > worst:
            worst = r
    return worst


def _initial_step(rhs, t0, y0, f0, rtol, atol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4.
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate_adaptive(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t0: float,
    sample_times: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    """Integrate ``y' = rhs(t, y)`` and return the state at each sample time.

    Args:
        rhs: Derivative function. Must return an array shaped like ``y``.
        y0: Initial state at ``t0``.
        t0: Initial time.
        sample_times: Strictly increasing times, the first one ``>= t0``.
        cfg: Tolerances and step limits.

    Returns:
        Array of shape ``(len(sample_times),) + y0.shape``.

    Raises:
        IntegrationError: If the step size underflows or ``cfg.max_steps`` is
            exceeded. The message names the time reached.
    """
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("sample_times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    if times[0] < t0:
        raise ValueError("first sample time precedes t0")

    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float), copy=True)
    shape, dtype = y.shape, y.dtype
    out = np.empty((times.size,) + shape, dtype=dtype)
    rtol, atol = cfg.rtol, cfg.atol

    # Work on a flat real view; complex entries become (re, im) pairs.
    y_flat = np.ascontiguousarray(y).reshape(-1).view(np.float64).copy()
    ks = np.empty((7, y_flat.size))
    y_stage = np.empty_like(y_flat)
    y_new = np.empty_like(y_flat)

    def f(t, flat):
        dy = np.asarray(rhs(t, flat.view(dtype).reshape(shape)), dtype=dtype)
        return np.ascontiguousarray(dy).reshape(-1).view(np.float64)

    t = float(t0)
    ks[0] = f(t, y_flat)
    h = _initial_step(f, t, y_flat, ks[0], rtol, atol)
    steps = 0

    for i, target in enumerate(times):
        while t < target:
            if steps >= cfg.max_steps:
                raise IntegrationError(
                    f"max_steps={cfg.max_steps} exceeded at t={t:.6g}"
                )
            if h < cfg.min_step * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t:.6g}")
            h_step = min(h, target - t)
            # Avoid a sliver step just before a sample time.
            if target - (t + h_step) < 1e-12 * max(1.0, abs(target)):
                h_step = target - t
            for s in range(1, 7):
                _combine(y_flat, h_step * _A_NZ[s], _A_IDX[s], ks, y_stage)
                ks[s] = f(t + _C[s] * h_step, y_stage)
            # The last stage is evaluated at the 5th order solution (FSAL).
            y_new[:] = y_stage
            err = _error_norm(h_step * _E_NZ, _E_IDX, ks, y_flat, y_new, rtol, atol)
            steps += 1
            if err <= 1.0:
                t = target if h_step == target - t else t + h_step
                y_flat, y_new = y_new, y_flat
                ks[0] = ks[6]
                factor = _MAX_FACTOR if err == 0 else min(
                    _MAX_FACTOR, _SAFETY * err ** -0.2
                )
                # A step shortened to land on a sample says nothing about h.
                h = max(h, h_step * factor) if h_step < h else h_step * factor
            else:
                h = h_step * max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        out[i] = y_flat.view(dtype).reshape(shape)
    return out


def fixed_grid(t0: float, t1: float, dt: float) -> int:
    """Number of fixed steps of size ``dt`` covering ``[t0, t1]``.

    Raises ValueError if ``dt`` does not divide the interval.
    """
    n = (t1 - t0) / dt
    n_int = int(round(n))
    if n_int < 1 or abs(n - n_int) > 1e-9 * max(1.0, n):
        raise ValueError(f"fixed_dt={dt!r} does not divide [{t0}, {t1}]")
    return n_int


def integrate_fixed_noisy(
    rhs: Callable[[float, np.ndarray, np.ndarray], np.ndarray],
    y0,
    t0: float,
    t1: float,
    cfg: IntegratorConfig,
    noise,
    sample_times: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Classical RK4 on a fixed grid with per-step held noise.

    ``rhs(t, y, xi)`` receives ``noise[n]`` for every stage of step ``n``.
    ``noise`` has shape ``(n_steps,) + extra`` where ``extra`` is whatever the
    caller's rhs expects (for instance one value per batched trajectory).

    Args:
        rhs: Derivative function ``(t, y, noise_value) -> dy/dt``.
        y0: State at ``t0``.
        t0, t1: Integration interval.
        cfg: Must carry ``fixed_dt``; it has to divide ``t1 - t0`` and the
            offset of every sample time from ``t0``.
        noise: Per-step noise values.
        sample_times: Times at which to record the state. Defaults to every
            grid point after ``t0``.

    Returns:
        Array of shape ``(len(sample_times),) + y0.shape``.
    """
    if cfg.fixed_dt is None:
        raise ValueError("fixed-step integration requires cfg.fixed_dt")
    dt = cfg.fixed_dt
    n_steps = fixed_grid(t0, t1, dt)
    noise = np.asarray(noise)
    if noise.shape[0] != n_steps:
        raise ValueError(
            f"noise has {noise.shape[0]} entries but the grid has {n_steps} steps"
        )
    if sample_times is None:
        sample_idx = np.arange(1, n_steps + 1)
    else:
        pos = (np.asarray(sample_times, dtype=float) - t0) / dt
        sample_idx = np.rint(pos).astype(int)
        if np.any(np.abs(pos - sample_idx) > 1e-9 * np.maximum(1.0, pos)):
            raise ValueError("fixed_dt does not divide the sample grid")
        if np.any(np.diff(sample_idx) <= 0) or sample_idx[0] < 0 or sample_idx[-1] > n_steps:
            raise ValueError("sample_times must be increasing and inside [t0, t1]")

    y = np.array(y0, dtype=np.result_type(np.asarray(y0).dtype, float), copy=True)
    out = np.empty((sample_idx.size,) + y.shape, dtype=y.dtype)
    j = 0
    while j < sample_idx.size and sample_idx[j] == 0:
        out[j] = y
        j += 1
    half = 0.5 * dt
    for n in range(n_steps):
        t = t0 + n * dt
        xi = noise[n]
        k1 = rhs(t, y, xi)
        k2 = rhs(t + half, y + half * k1, xi)
        k3 = rhs(t + half, y + half * k2, xi)
        k4 = rhs(t + dt, y + dt * k3, xi)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        while j < sample_idx.size and sample_idx[j] == n + 1:
            out[j] = y
            j += 1
    return out
