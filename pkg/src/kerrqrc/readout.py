"""Linear readout: ridge-regression training, prediction and error metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

__all__ = [
    "GAMMA_GRID",
    "RankDeficientError",
    "TrainingSet",
    "ReadoutWeights",
    "PerformanceStats",
    "feature_matrix",
    "train_readout",
    "predict",
    "rms_error",
    "spread_factor",
    "summarize",
    "gamma_sweep",
]

GAMMA_GRID = tuple(10.0 ** k for k in range(-12, 1))


class RankDeficientError(np.linalg.LinAlgError):
    """The regularised normal equations are not positive definite."""


def feature_matrix(features: np.ndarray) -> np.ndarray:
    """Column-stack batched features ``(M, n_out, n_samples)`` into ``(n_out*n_samples, M)``.

    Within each column the channels of one sample time are adjacent and the
    sample times run in ascending order.
    """
    features = np.asarray(features, dtype=float)
    m = features.shape[0]
    return np.ascontiguousarray(np.transpose(features, (0, 2, 1)).reshape(m, -1).T)


@dataclass
class TrainingSet:
    phases: np.ndarray
    features: np.ndarray  # (n_features, M)

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float).reshape(-1)
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        if self.features.shape[1] != self.phases.size:
            raise ValueError(
                f"{self.phases.size} phases but {self.features.shape[1]} feature columns"
            )
        if self.phases.size == 0:
            raise ValueError("training set is empty")

    @classmethod
    def from_batch(cls, phases, features: np.ndarray) -> "TrainingSet":
        return cls(phases, feature_matrix(features))


@dataclass
class ReadoutWeights:
    weights: np.ndarray
    gamma: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("readout weights must be finite")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow([repr(float(self.gamma))] + [repr(float(w)) for w in self.weights])

    @classmethod
    def from_csv(cls, path) -> "ReadoutWeights":
        with open(path, newline="", encoding="utf-8") as fh:
            row = next(csv.reader(fh))
        return cls(np.array([float(v) for v in row[1:]]), float(row[0]))


def train_readout(ts: TrainingSet, gamma: float) -> ReadoutWeights:
    """Ridge solution ``W = Y S^T (S S^T + gamma I)^-1``.

    When there are fewer training instances than features the equivalent
    ``W = Y (S^T S + gamma I)^-1 S^T`` is solved instead; both are Cholesky
    solves of a symmetric positive-definite system.

    Raises:
        RankDeficientError: The system is singular, typically at ``gamma=0``
            with linearly dependent features or instances.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    S, y = ts.features, ts.phases
    n_feat, m = S.shape
    if m < n_feat:
        gram = S.T @ S
        rhs = y
    else:
        gram = S @ S.T
        rhs = S @ y
    gram[np.diag_indices_from(gram)] += gamma
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=True)
        sol = linalg.cho_solve(factor, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError(
            f"normal equations are singular at gamma={gamma:g}; use gamma > 0"
        ) from exc
    w = S @ sol if m < n_feat else sol
    if not np.all(np.isfinite(w)):
        raise RankDeficientError(f"non-finite weights at gamma={gamma:g}; use gamma > 0")
    return ReadoutWeights(w, gamma)


def predict(w: ReadoutWeights, features) -> np.ndarray | float:
    """Phase estimate ``W . s``. ``features`` is one stacked vector or a matrix of columns."""
    f = np.asarray(features, dtype=float)
    if f.shape[0] != w.weights.size:
        raise ValueError(f"expected {w.weights.size} features, got {f.shape[0]}")
    out = w.weights @ f
    return float(out) if np.ndim(out) == 0 else out


def rms_error(est: Sequence[float], act: Sequence[float]) -> float:
    est = np.asarray(est, dtype=float).reshape(-1)
    act = np.asarray(act, dtype=float).reshape(-1)
    if est.size == 0:
        raise ValueError("rms_error of an empty set")
    if est.size != act.size:
        raise ValueError("estimate and target lengths differ")
    return float(np.sqrt(np.mean((est - act) ** 2)))


def spread_factor(best: float, worst: float, mean: float) -> float:
    """Relative spread ``(worst - best) / mean`` of RMS errors across reservoirs."""
    if not mean > 0:
        raise ValueError("mean RMS error must be positive")
    return abs(worst - best) / mean


@dataclass(frozen=True)
class PerformanceStats:
    rms_mean: float
    rms_std: float
    rms_best: float
    rms_worst: float
    spread_factor: float


def summarize(rms_values: Sequence[float]) -> PerformanceStats:
    """Aggregate RMS errors over an ensemble of reservoirs (population std)."""
    r = np.asarray(rms_values, dtype=float)
    if r.size == 0:
        raise ValueError("no RMS values to summarize")
    mean = float(np.mean(r))
    best, worst = float(np.min(r)), float(np.max(r))
    return PerformanceStats(
        rms_mean=mean,
        rms_std=float(np.std(r)),
        rms_best=best,
        rms_worst=worst,
        spread_factor=spread_factor(best, worst, mean),
    )


def gamma_sweep(
    train: TrainingSet,
    test_features: np.ndarray,
    test_phases,
    gammas: Sequence[float] = GAMMA_GRID,
    validation: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> tuple[ReadoutWeights, float]:
    """Train at every ``gamma`` and keep the weights with the lowest RMS error.

    Selection uses the test set unless ``validation=(features, phases)`` is
    given, in which case the held-out set picks ``gamma`` and the returned RMS
    is still measured on the test set. Ties go to the larger ``gamma``.
    Values of ``gamma`` whose system is singular are skipped.

    Returns:
        ``(weights, test_rms)``.

    Raises:
        RankDeficientError: Every candidate was singular.
    """
    sel_features, sel_phases = (
        (test_features, test_phases) if validation is None else validation
    )
    best = None
    for gamma in sorted(gammas):
        try:
            w = train_readout(train, gamma)
        except RankDeficientError:
            continue
        score = rms_error(predict(w, sel_features), sel_phases)
        if not np.isfinite(score):
            continue
        if best is None or score <= best[1]:
            best = (w, score)
    if best is None:
        raise RankDeficientError("no gamma on the grid gave a solvable system")
    w = best[0]
    if validation is None:
        return w, best[1]
    return w, rms_error(predict(w, test_features), test_phases)
