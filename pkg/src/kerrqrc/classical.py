"""Classical Kerr oscillator and the hidden-variable qubit reservoir.

The classical reservoir integrates one complex amplitude ``a = (X + iP)/sqrt2``
from ``a(0) = 0``. Two equations of motion are available:

``"literal"``
    ``da/dt = -iK(a - 2a*) - (kappa/2) a - i u``
``"normal_ordered"``
    ``da/dt = -iK(1 + 2|a|^2) a - (kappa/2) a - i u``

The literal form is linear in ``(a, a*)``; the normal-ordered form is the
mean-field limit of the quantum Kerr Hamiltonian.

The hidden-variable reservoir takes qubit trajectories from the quantum
simulation and re-expresses each Bloch vector in spherical coordinates.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .integrators import IntegratorConfig, integrate_adaptive, integrate_fixed_noisy
from .quantum import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    FeatureSeries,
    ReservoirParams,
    qrc_features,
)

__all__ = [
    "CLASSICAL_FORMS",
    "RADIUS_FORMS",
    "BlochVector",
    "HVCoords",
    "crc_rhs",
    "crc_features",
    "simulate_crc",
    "quadratures",
    "bloch_from_density",
    "hv_from_bloch",
    "bloch_from_hv",
    "hv_transform",
    "hvrc_features",
    "simulate_hvrc",
]

CLASSICAL_FORMS = ("literal", "normal_ordered")
RADIUS_FORMS = ("literal", "conventional")


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float


class HVCoords(NamedTuple):
    r: float
    theta: float
    phi: float


def _check_form(form: str) -> None:
    if form not in CLASSICAL_FORMS:
        raise ValueError(
            f"unknown classical form {form!r}; expected one of {CLASSICAL_FORMS}"
        )


def crc_rhs(a, params: ReservoirParams, u, form: str = "literal"):
    """Time derivative of the classical amplitude for drive value ``u``.

    Works elementwise, so ``a`` and ``u`` may be arrays of matching shape.
    """
    _check_form(form)
    a = np.asarray(a, dtype=complex)
    K, kappa = params.kerr, params.kappa
    if form == "literal":
        nonlinear = -1j * K * (a - 2.0 * np.conj(a))
    else:
        nonlinear = -1j * K * (1.0 + 2.0 * np.abs(a) ** 2) * a
    out = nonlinear - 0.5 * kappa * a - 1j * np.asarray(u)
    return out if out.ndim else complex(out)


def quadratures(a):
    """``(X, P)`` of a classical amplitude."""
    a = np.asarray(a)
    return np.sqrt(2) * a.real, np.sqrt(2) * a.imag


def crc_features(
    params: ReservoirParams,
    phases,
    sample_times,
    full_quadratures: bool = False,
    form: str = "literal",
    cfg: IntegratorConfig = IntegratorConfig(),
    input_noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Batched classical output, shape ``(n_phases, n_out, n_samples)``.

    ``n_out`` is 1 (X only) or 2 (X then P). ``input_noise`` of shape
    ``(n_steps, n_phases)`` switches to the fixed-step integrator.
    """
    _check_form(form)
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    sample_times = np.asarray(sample_times, dtype=float)
    alpha, omega = params.drive_amp, params.drive_freq
    a0 = np.zeros(phases.size, dtype=complex)

    if input_noise is None:
        def rhs(t, a):
            return crc_rhs(a, params, alpha * np.sin(omega * t + phases), form)

        traj = integrate_adaptive(rhs, a0, 0.0, sample_times, cfg)
    else:
        def rhs(t, a, xi):
            return crc_rhs(a, params, alpha * np.sin(omega * t + phases) + xi, form)

        traj = integrate_fixed_noisy(
            rhs, a0, 0.0, float(sample_times[-1]), cfg, input_noise, sample_times
        )
    x, p = quadratures(traj.T)
    chans = [x, p] if full_quadratures else [x]
    return np.stack(chans, axis=1)


def simulate_crc(
    params: ReservoirParams,
    phase: float,
    sample_times,
    full_quadratures: bool = False,
    form: str = "literal",
    cfg: IntegratorConfig = IntegratorConfig(),
) -> FeatureSeries:
    values = crc_features(params, [phase], sample_times, full_quadratures, form, cfg)[0]
    return FeatureSeries(np.asarray(sample_times, dtype=float), values)


def bloch_from_density(rho) -> BlochVector:
    """Pauli expectation values of a qubit state (``sigma_z|0> = +|0>``).

    ``rho`` may carry leading batch axes; the components are then arrays.
    """
    rho = np.asarray(rho)
    if rho.shape[-2:] != (2, 2):
        raise ValueError(f"Bloch vector needs a 2x2 density matrix, got {rho.shape[-2:]}")
    comps = [np.einsum("...mn,nm->...", rho, op).real for op in (PAULI_X, PAULI_Y, PAULI_Z)]
    return BlochVector(*comps)


def hv_from_bloch(b: BlochVector, radius: str = "literal") -> HVCoords:
    """Spherical coordinates of a Bloch vector.

    With ``radius="literal"`` the radial coordinate is ``x^2 + y^2 + z^2``;
    with ``"conventional"`` it is the Euclidean norm. The polar angle is
    ``arccos(z/r)`` (argument clipped to [-1, 1]) and the azimuth is
    ``atan2(y, x)``. Undefined angles are set to 0.
    """
    if radius not in RADIUS_FORMS:
        raise ValueError(f"unknown radius form {radius!r}; expected one of {RADIUS_FORMS}")
    x, y, z = (np.asarray(c, dtype=float) for c in b)
    r2 = x * x + y * y + z * z
    r = r2 if radius == "literal" else np.sqrt(r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_theta = np.where(r > 0, z / np.where(r > 0, r, 1.0), 1.0)
    theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
    phi = np.where((x == 0) & (y == 0), 0.0, np.arctan2(y, x))
    # atan2 returns -pi on the negative real axis with y = -0.0; fold to +pi.
    phi = np.where(phi == -np.pi, np.pi, phi)
    coords = HVCoords(r, theta, phi)
    if r.ndim == 0:
        return HVCoords(*(float(c) for c in coords))
    return coords


def bloch_from_hv(hv: HVCoords) -> BlochVector:
    """Inverse map, treating ``r`` as the Euclidean radius."""
    r, theta, phi = (np.asarray(c, dtype=float) for c in hv)
    st = np.sin(theta)
    return BlochVector(r * st * np.cos(phi), r * st * np.sin(phi), r * np.cos(theta))


def hv_transform(full_qrc: np.ndarray, radius: str = "literal") -> np.ndarray:
    """Map full-tomography features ``(..., 3, n_samples)`` to ``(r, theta, phi)``."""
    b = BlochVector(full_qrc[..., 0, :], full_qrc[..., 1, :], full_qrc[..., 2, :])
    return np.stack(tuple(hv_from_bloch(b, radius)), axis=-2)


def hvrc_features(
    params: ReservoirParams,
    phases,
    sample_times,
    radius: str = "literal",
    cfg: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    qubit = params.with_dim(2)
    full = qrc_features(qubit, phases, sample_times, full_tomography=True, cfg=cfg)
    return hv_transform(full, radius)


def simulate_hvrc(
    params: ReservoirParams,
    phase: float,
    sample_times,
    radius: str = "literal",
    cfg: IntegratorConfig = IntegratorConfig(),
) -> FeatureSeries:
    """Hidden-variable features ``(r, theta, phi)`` for one phase; ``dim`` is forced to 2."""
    values = hvrc_features(params, [phase], sample_times, radius, cfg)[0]
    return FeatureSeries(np.asarray(sample_times, dtype=float), values)
