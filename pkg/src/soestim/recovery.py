"""Greedy sparse recovery and the evaluation metrics for it."""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import DimensionMismatch
from .linalg import least_squares
from .validation import as_complex_matrix, as_complex_vector

UNIT_NORM_TOL = 1e-6


@dataclass
class SparseSignal:
    """A length-dim complex vector given by its support and amplitudes.

    Support indices are 0-based, strictly increasing; amplitudes are
    aligned with them and nonzero. An empty support is the zero signal.
    """

    dim: int
    support: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        self.dim = int(self.dim)
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        sup = np.asarray(self.support, dtype=np.int64).reshape(-1)
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if sup.shape != amp.shape:
            raise ValueError(
                f"support and amplitudes differ in length: "
                f"{sup.size} vs {amp.size}"
            )
        if sup.size:
            if sup[0] < 0 or sup[-1] >= self.dim or np.any(np.diff(sup) <= 0):
                raise ValueError(
                    "support must be strictly increasing within [0, dim)"
                )
            if np.any(amp == 0):
                raise ValueError("amplitudes must be nonzero")
        self.support = sup
        self.amplitudes = amp

    def dense(self) -> np.ndarray:
        x = np.zeros(self.dim, dtype=np.complex128)
        x[self.support] = self.amplitudes
        return x


@dataclass
class RecoveryResult:
    estimate: SparseSignal
    residual_norm: float
    iterations: int

    def __post_init__(self):
        if self.iterations != self.estimate.support.size:
            raise ValueError(
                f"iterations={self.iterations} but support has "
                f"{self.estimate.support.size} entries"
            )


def omp(a, b, steps: int, residual_tol: float | None = None) -> RecoveryResult:
    """Orthogonal matching pursuit for a fixed number of steps.

    Each step picks the column most correlated with the residual (ties
    break toward the lowest index), then re-fits all selected columns
    by least squares. Columns must be unit-norm so correlations are
    comparable. With residual_tol set, iteration stops early once the
    residual norm drops to or below it; the default runs all steps,
    matching protocols that fix the iteration count. Selecting a column
    that makes the subproblem rank deficient raises RankDeficientError.
    """
    a = as_complex_matrix(a, "a")
    b = as_complex_vector(b, "b")
    m, n = a.shape
    if b.shape[0] != m:
        raise DimensionMismatch(f"b has length {b.shape[0]}, a has {m} rows")
    norms = np.linalg.norm(a, axis=0)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        raise ValueError("columns of a must be unit-norm")
    steps = int(steps)
    if not 0 <= steps <= min(m, n):
        raise ValueError(
            f"steps must lie in [0, min(rows, cols)] = [0, {min(m, n)}]"
        )

    residual = b.copy()
    picked: list[int] = []
    coef = np.zeros(0, dtype=np.complex128)
    for _ in range(steps):
        corr = np.abs(a.conj().T @ residual)
        corr[picked] = -1.0
        j = int(np.argmax(corr))
        picked.append(j)
        coef = least_squares(a[:, picked], b)
        residual = b - a[:, picked] @ coef
        if residual_tol is not None and np.linalg.norm(residual) <= residual_tol:
            break

    order = np.argsort(picked)
    support = np.asarray(picked, dtype=np.int64)[order]
    amplitudes = coef[order] if picked else coef
    # A zero least-squares coefficient would violate the SparseSignal
    # invariant; nudge is not acceptable, so drop such entries instead.
    keep = amplitudes != 0
    estimate = SparseSignal(
        dim=n, support=support[keep], amplitudes=amplitudes[keep]
    )
    return RecoveryResult(
        estimate=estimate,
        residual_norm=float(np.linalg.norm(residual)),
        iterations=int(np.count_nonzero(keep)),
    )


def kmax_from_coherence(mu: float) -> int:
    """Largest sparsity with guaranteed unique recovery at coherence mu.

    The guarantee requires K < (1 + 1/mu) / 2, strictly. Values of the
    bound within 1e-9 of an integer are snapped to it before applying
    the strict inequality, so exact rational coherences are not
    misrounded by floating point.
    """
    mu = float(mu)
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    t = 0.5 * (1.0 + 1.0 / mu)
    nearest = round(t)
    if abs(t - nearest) < 1e-9:
        t = nearest
    return ceil(t) - 1


def _require_same_dim(est: SparseSignal, truth: SparseSignal) -> None:
    if est.dim != truth.dim:
        raise DimensionMismatch(
            f"signals have different dims: {est.dim} vs {truth.dim}"
        )


def support_success(est: SparseSignal, truth: SparseSignal) -> bool:
    """True iff the two signals occupy exactly the same index set."""
    _require_same_dim(est, truth)
    return set(est.support.tolist()) == set(truth.support.tolist())


def l2_error(est: SparseSignal, truth: SparseSignal) -> float:
    """Euclidean distance between the densified signals."""
    _require_same_dim(est, truth)
    return float(np.linalg.norm(est.dense() - truth.dense()))
