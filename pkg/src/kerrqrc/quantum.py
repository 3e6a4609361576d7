"""Truncated-Fock-space model of the driven, damped Kerr oscillator.

The density matrix obeys

    d rho/dt = -i [H(t), rho] + kappa (a rho a^+ - {a^+ a, rho} / 2),
    H(t)     = K (a^+ a)^2 + u(t) (a + a^+),

with ``u(t) = alpha * sin(omega_u t + phase)`` and the oscillator starting in
vacuum. The reservoir output is the X-quadrature expectation value sampled on
a fixed time grid.

The generic :func:`lindblad_rhs` works on explicit matrices and is kept as the
reference form. Simulations use a batched right-hand side that exploits the
ladder structure of every operator involved, so a whole set of input phases
is propagated at once.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .integrators import IntegratorConfig, integrate_adaptive, integrate_fixed_noisy

__all__ = [
    "ReservoirParams",
    "FeatureSeries",
    "TruncationReport",
    "build_lowering",
    "build_number",
    "build_quadratures",
    "build_hamiltonian",
    "lindblad_rhs",
    "vacuum",
    "simulate_qrc",
    "qrc_features",
    "qrc_trajectory",
    "check_truncation",
    "pack_hermitian",
    "unpack_hermitian",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ReservoirParams:
    """Physical parameters of one reservoir.

    Attributes:
        kerr: Kerr nonlinearity K.
        kappa: Photon loss rate.
        drive_amp: Input amplitude alpha.
        drive_freq: Input angular frequency omega_u.
        dim: Fock-space truncation (2 is a qubit).
    """

    kerr: float
    kappa: float
    drive_amp: float
    drive_freq: float
    dim: int = 12

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        if self.kappa < 0 or self.drive_amp < 0 or self.drive_freq < 0:
            raise ValueError("kappa, drive_amp and drive_freq must be non-negative")

    def with_dim(self, dim: int) -> "ReservoirParams":
        return ReservoirParams(self.kerr, self.kappa, self.drive_amp, self.drive_freq, dim)

    def as_dict(self) -> dict:
        return {
            "kerr": self.kerr,
            "kappa": self.kappa,
            "drive_amp": self.drive_amp,
            "drive_freq": self.drive_freq,
            "dim": self.dim,
        }


@dataclass
class FeatureSeries:
    """Sampled reservoir output, ``values[channel, sample]``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != self.times.size:
            raise ValueError("values must have one column per sample time")

    @property
    def n_out(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.times.size

    def stacked(self) -> np.ndarray:
        """Column-stack: all channels at t_1, then all channels at t_2, ..."""
        return self.values.T.reshape(-1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "channel", "value"])
            for k, t in enumerate(self.times):
                for c in range(self.n_out):
                    writer.writerow([repr(float(t)), c, repr(float(self.values[c, k]))])

    @classmethod
    def from_csv(cls, path) -> "FeatureSeries":
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                rows.append((float(row["time"]), int(row["channel"]), float(row["value"])))
        times = sorted({r[0] for r in rows})
        n_out = max(r[1] for r in rows) + 1
        index = {t: k for k, t in enumerate(times)}
        values = np.zeros((n_out, len(times)))
        for t, c, v in rows:
            values[c, index[t]] = v
        return cls(np.array(times), values)


def build_lowering(dim: int) -> np.ndarray:
    """Lowering operator truncated to ``dim`` Fock states."""
    if int(dim) != dim or dim < 2:
        raise ValueError(f"invalid dimension {dim!r}; need an integer >= 2")
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def build_number(dim: int) -> np.ndarray:
    a = build_lowering(dim)
    return a.conj().T @ a


def build_quadratures(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(X, P)`` with ``X = (a + a^+)/sqrt2`` and ``P = -i(a - a^+)/sqrt2``."""
    a = build_lowering(dim)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2), -1j * (a - ad) / np.sqrt(2)


def build_hamiltonian(params: ReservoirParams, u: float) -> np.ndarray:
    """Kerr Hamiltonian with instantaneous drive value ``u`` (alpha already applied)."""
    a = build_lowering(params.dim)
    n = a.conj().T @ a
    return params.kerr * (n @ n) + u * (a + a.conj().T)


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, kappa: float) -> np.ndarray:
    """``-i[H, rho] + kappa D[a] rho`` for explicit matrices."""
    rho = np.asarray(rho)
    h = np.asarray(h)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho must be a square matrix")
    if h.shape != rho.shape:
        raise ValueError(f"dimension mismatch: H is {h.shape}, rho is {rho.shape}")
    a = build_lowering(rho.shape[0])
    ad = a.conj().T
    n = ad @ a
    return -1j * (h @ rho - rho @ h) + kappa * (
        a @ rho @ ad - 0.5 * (n @ rho + rho @ n)
    )


def vacuum(dim: int) -> np.ndarray:
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _pair_index(d: int) -> np.ndarray:
    """``k[m, n]``: position of the pair ``m < n`` in row-major order (else -1)."""
    k = -np.ones((d, d), dtype=np.int64)
    iu = np.triu_indices(d, 1)
    k[iu] = np.arange(iu[0].size)
    return k


def pack_hermitian(rho: np.ndarray) -> np.ndarray:
    """Pack Hermitian ``(..., d, d)`` matrices into ``(..., d*d)`` reals.

    Layout: the d diagonal entries, then the real parts of the upper triangle
    in row-major order, then the imaginary parts in the same order.
    """
    d = rho.shape[-1]
    iu = np.triu_indices(d, 1)
    upper = rho[..., iu[0], iu[1]]
    diag = np.diagonal(rho, axis1=-2, axis2=-1).real
    return np.concatenate([diag, upper.real, upper.imag], axis=-1)


def unpack_hermitian(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_hermitian`."""
    d = int(round(np.sqrt(v.shape[-1])))
    p = d * (d - 1) // 2
    iu = np.triu_indices(d, 1)
    rho = np.zeros(v.shape[:-1] + (d, d), dtype=complex)
    idx = np.arange(d)
    rho[..., idx, idx] = v[..., :d]
    upper = v[..., d:d + p] + 1j * v[..., d + p:]
    rho[..., iu[0], iu[1]] = upper
    rho[..., iu[1], iu[0]] = upper.conj()
    return rho


@njit(cache=True, fastmath=True)
def _lindblad_packed(v, u, diag, sqe, kappa, kidx, out):
    # v, out: (batch, d*d) packed Hermitian states. The scratch matrix is
    # zero-padded by one row/column on each side so ladder shifts need no
    # bounds checks; sqe[i] = sqrt(i) for i = 0..d.
    nb = v.shape[0]
    d = diag.shape[0]
    p = d * (d - 1) // 2
    r = np.zeros((d + 2, d + 2), dtype=np.complex128)
    for b in range(nb):
        for m in range(d):
            r[m + 1, m + 1] = v[b, m]
            for n in range(m + 1, d):
                k = kidx[m, n]
                z = complex(v[b, d + k], v[b, d + p + k])
                r[m + 1, n + 1] = z
                r[n + 1, m + 1] = z.conjugate()
        mu = -1j * u[b]
        for m in range(d):
            i = m + 1
            for n in range(m, d):
                j = n + 1
                c = (sqe[m + 1] * r[i + 1, j] + sqe[m] * r[i - 1, j]
                     - sqe[n] * r[i, j - 1] - sqe[n + 1] * r[i, j + 1])
                val = (diag[m, n] * r[i, j] + mu * c
                       + kappa * sqe[m + 1] * sqe[n + 1] * r[i + 1, j + 1])
                if m == n:
                    out[b, m] = val.real
                else:
                    k = kidx[m, n]
                    out[b, d + k] = val.real
                    out[b, d + p + k] = val.imag
    return out


class _BatchedLindblad:
    """Lindblad rhs on a stack of packed density matrices, shape ``(B, d*d)``.

    Every operator is diagonal or a single off-diagonal band, so the rhs is a
    handful of shifted elementwise products; no matrix products are formed.
    Only the upper triangle is computed.
    """

    def __init__(self, params: ReservoirParams):
        d = params.dim
        m = np.arange(d)
        self.sqe = np.sqrt(np.arange(d + 1, dtype=float))
        diff = (m[:, None] ** 2 - m[None, :] ** 2).astype(float)
        tot = (m[:, None] + m[None, :]).astype(float)
        self.diag = -1j * params.kerr * diff - 0.5 * params.kappa * tot
        self.kappa = float(params.kappa)
        self.kidx = _pair_index(d)

    def __call__(self, v: np.ndarray, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        return _lindblad_packed(
            v, np.asarray(u, dtype=float), self.diag, self.sqe, self.kappa, self.kidx, out
        )


def _observables(dim: int, full_tomography: bool) -> list[np.ndarray]:
    if full_tomography:
        if dim != 2:
            raise ValueError(
                f"full tomography is only defined for a qubit (dim=2), got dim={dim}"
            )
        return [PAULI_X, PAULI_Y, PAULI_Z]
    x, _ = build_quadratures(dim)
    return [x]


def _packed_functional(op: np.ndarray) -> np.ndarray:
    """Vector ``o`` with ``Tr[rho op] = o . pack_hermitian(rho)`` for Hermitian ``op``."""
    d = op.shape[0]
    iu = np.triu_indices(d, 1)
    lower = op[iu[1], iu[0]]  # op[n, m] for m < n
    return np.concatenate([np.diagonal(op).real, 2 * lower.real, -2 * lower.imag])


def _evolve(
    params: ReservoirParams,
    phases: np.ndarray,
    sample_times: np.ndarray,
    cfg: IntegratorConfig,
    input_noise: Optional[np.ndarray],
) -> np.ndarray:
    """Propagate vacuum for every phase.

    Returns packed states of shape ``(n_samples, n_phases, d*d)``.
    """
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    sample_times = np.asarray(sample_times, dtype=float)
    rhs_core = _BatchedLindblad(params)
    alpha, omega = params.drive_amp, params.drive_freq
    v0 = np.zeros((phases.size, params.dim ** 2))
    v0[:, 0] = 1.0

    if input_noise is None:
        def rhs(t, v):
            return rhs_core(v, alpha * np.sin(omega * t + phases))

        return integrate_adaptive(rhs, v0, 0.0, sample_times, cfg)

    def rhs_noisy(t, v, xi):
        return rhs_core(v, alpha * np.sin(omega * t + phases) + xi)

    return integrate_fixed_noisy(
        rhs_noisy, v0, 0.0, float(sample_times[-1]), cfg, input_noise, sample_times
    )


def qrc_features(
    params: ReservoirParams,
    phases,
    sample_times,
    full_tomography: bool = False,
    cfg: IntegratorConfig = IntegratorConfig(),
    input_noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Batched QRC output for many phases.

    Args:
        params: Reservoir parameters; ``params.dim`` sets the truncation.
        phases: Input phases, one trajectory each.
        sample_times: Output sample grid.
        full_tomography: Record the three Pauli expectations (qubit only)
            instead of the X quadrature.
        cfg: Integrator settings. ``cfg.fixed_dt`` is required when
            ``input_noise`` is given.
        input_noise: Optional ``(n_steps, n_phases)`` additive drive noise,
            switching to the fixed-step integrator.

    Returns:
        Array of shape ``(n_phases, n_out, n_samples)``.
    """
    ops = np.stack([_packed_functional(op) for op in _observables(params.dim, full_tomography)])
    states = _evolve(params, phases, sample_times, cfg, input_noise)
    # (t, b, k) . (c, k) -> (b, c, t)
    return np.einsum("tbk,ck->bct", states, ops)


def qrc_trajectory(
    params: ReservoirParams,
    phases,
    sample_times,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    """Density matrices at the sample times, shape ``(n_phases, n_samples, d, d)``."""
    states = _evolve(params, phases, sample_times, cfg, None)
    return unpack_hermitian(np.transpose(states, (1, 0, 2)))


def simulate_qrc(
    params: ReservoirParams,
    phase: float,
    sample_times,
    full_tomography: bool = False,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> FeatureSeries:
    """Simulate one input phase and return its sampled output."""
    values = qrc_features(params, [phase], sample_times, full_tomography, cfg)[0]
    return FeatureSeries(np.asarray(sample_times, dtype=float), values)


@dataclass(frozen=True)
class TruncationReport:
    max_top_population: float
    max_second_population: float
    max_commutator_error: float

    @property
    def valid_oscillator(self) -> bool:
        """Whether the canonical commutator holds to 1% at every sample."""
        return self.max_commutator_error < 0.01


def check_truncation(rho_trajectory) -> TruncationReport:
    """Summarise how much the top of the Fock ladder is occupied.

    ``rho_trajectory`` is any array of density matrices whose last two axes are
    the matrix indices.
    """
    rho = np.asarray(rho_trajectory)
    d = rho.shape[-1]
    pops = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    # [a, a^+] in the truncated space is diag(1, ..., 1, -(d-1)).
    comm = np.ones(d)
    comm[-1] = -(d - 1)
    comm_err = np.abs(np.sum(pops * comm, axis=-1) - 1.0)
    return TruncationReport(
        max_top_population=float(np.max(pops[..., -1])),
        max_second_population=float(np.max(pops[..., -2])),
        max_commutator_error=float(np.max(comm_err)),
    )
