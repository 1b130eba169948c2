"""Complex dense linear algebra kernels.

All functions operate on numpy complex128 arrays, treat inputs as
immutable, and return fresh arrays. Matrices are row-major; vectors are
1-d. These are the primitives the design, estimation, and recovery
layers build on.
"""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .errors import (
    BudgetExceededError,
    ConvergenceError,
    RankDeficientError,
)
from .validation import (
    as_complex_matrix,
    as_complex_vector,
    require_no_zero_columns,
    require_same_columns,
)

DEFAULT_RANK_TOL = 1e-8
KRUSKAL_SUBSET_BUDGET = 10**6


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices.

    Block (i, j) of the result equals a[i, j] * b, so the output shape is
    (a.rows * b.rows, a.cols * b.cols).
    """
    a = as_complex_matrix(a, "a")
    b = as_complex_matrix(b, "b")
    if a.size == 0 or b.size == 0:
        raise ValueError("kron requires non-empty operands")
    return np.kron(a, b)


def khatri_rao(phi, psi) -> np.ndarray:
    """Column-wise Kronecker product.

    Column j of the result is kron(phi[:, j], psi[:, j]); both operands
    must have the same number of columns.
    """
    phi = as_complex_matrix(phi, "phi")
    psi = as_complex_matrix(psi, "psi")
    require_same_columns(phi, psi)
    # (p, n) and (q, n) -> (p*q, n), phi index varying slowest.
    return (phi[:, None, :] * psi[None, :, :]).reshape(
        phi.shape[0] * psi.shape[0], phi.shape[1]
    )


def coherence(a) -> float:
    """Largest normalized inner product between distinct columns.

    Requires at least two columns, none of them zero. The result lies in
    [0, 1]: 0 for orthogonal columns, 1 when two columns are parallel.
    """
    a = as_complex_matrix(a, "a")
    if a.shape[1] < 2:
        raise ValueError("coherence requires at least 2 columns")
    require_no_zero_columns(a, "a")
    q = normalize_columns(a)
    g = np.abs(q.conj().T @ q)
    np.fill_diagonal(g, 0.0)
    return float(min(g.max(), 1.0))


def kruskal_rank(a, r_max: int | None = None) -> int:
    """Largest r such that every r-column subset is linearly independent.

    Exact brute force over column subsets, suitable only for small
    matrices; raises BudgetExceededError once more than
    KRUSKAL_SUBSET_BUDGET subsets would need to be examined. A matrix
    with a zero column has Kruskal rank 0. The search is capped at
    r_max when given (r_max must not exceed min(rows, cols)).
    """
    a = as_complex_matrix(a, "a")
    m, n = a.shape
    cap = min(m, n)
    if r_max is not None:
        if r_max > cap:
            raise ValueError(f"r_max={r_max} exceeds min(rows, cols)={cap}")
        cap = min(cap, int(r_max))
    if a.size and np.any(np.abs(a).max(axis=0) == 0.0):
        return 0
    examined = 0
    rank_ok = 0
    for r in range(1, cap + 1):
        count = comb(n, r)
        if examined + count > KRUSKAL_SUBSET_BUDGET:
            raise BudgetExceededError(
                f"kruskal_rank would examine more than "
                f"{KRUSKAL_SUBSET_BUDGET} column subsets"
            )
        examined += count
        for cols in combinations(range(n), r):
            if numerical_rank(a[:, cols], DEFAULT_RANK_TOL) < r:
                return rank_ok
        rank_ok = r
    return rank_ok


def singular_values(a) -> np.ndarray:
    """Singular values of a matrix, sorted non-increasing."""
    a = as_complex_matrix(a, "a")
    if a.size == 0:
        raise ValueError("singular_values requires a non-empty matrix")
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc


def numerical_rank(a, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count of singular values above rel_tol times the largest one."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    s = singular_values(a)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def least_squares(a, b) -> np.ndarray:
    """Solve min ||a x - b||_2 for a tall, full-column-rank matrix."""
    a = as_complex_matrix(a, "a")
    b = as_complex_vector(b, "b")
    m, n = a.shape
    if m < n:
        raise ValueError(f"system must be square or tall, got {m}x{n}")
    if b.shape[0] != m:
        raise ValueError(f"b has length {b.shape[0]}, expected {m}")
    try:
        x, _, rank, _ = np.linalg.lstsq(a, b, rcond=DEFAULT_RANK_TOL)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"least squares failed: {exc}") from exc
    if rank < n:
        raise RankDeficientError(
            f"matrix is numerically rank deficient: rank {rank} < {n} columns"
        )
    return x


def normalize_columns(a) -> np.ndarray:
    """Scale each column to unit Euclidean norm."""
    a = as_complex_matrix(a, "a")
    require_no_zero_columns(a, "a")
    # pre-scale by the max modulus so the norm of a column whose entries
    # span hundreds of orders of magnitude cannot overflow
    scaled = a / np.abs(a).max(axis=0)
    return scaled / np.linalg.norm(scaled, axis=0)
