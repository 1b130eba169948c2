"""Sparsity order estimation from a single compressed measurement.

The pipeline: a measurement vector b = A x + n of length m is cut into
k overlapping (or abutting) blocks of length ell that advance by p
samples, giving an ell x k matrix B. When A carries the right
column-wise Kronecker structure, the rank of the noiseless B equals the
number of nonzero entries of x, so estimating the sparsity order
reduces to estimating the effective rank of one reshaped vector.

Under noise the rank decision is made by comparing the singular values
of B against Monte-Carlo calibrated thresholds: thresholds[j] is a
high quantile of the largest singular value of a pure-noise matrix
deflated to its trailing (ell-j+1) x (k-j+1) block, so the test walks
down the singular values and stops at the first one that noise alone
could plausibly explain. Calibration can match the exact blocking
scheme, because overlapping blocks reuse noise samples and push the
noise singular values above the iid case.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from hashlib import blake2s
from math import ceil

import numpy as np

from .errors import DimensionMismatch, InfeasibleError
from .linalg import (
    khatri_rao,
    kruskal_rank,
    normalize_columns,
    numerical_rank,
    singular_values,
)
from .validation import as_complex_matrix, as_complex_vector
from .vandermonde import VandermondeSpec, materialize

NO_OVERLAP = 0  # sentinel for blocking_params: pick p = ell = divisor of m


@dataclass
class BlockingScheme:
    """Block geometry (m, ell, p, k) with ell + p*(k-1) == m."""

    m: int
    ell: int
    p: int
    k: int

    def __post_init__(self):
        self.m, self.ell = int(self.m), int(self.ell)
        self.p, self.k = int(self.p), int(self.k)
        if not (1 <= self.p <= self.ell <= self.m):
            raise ValueError(
                f"need 1 <= p <= ell <= m, got p={self.p} ell={self.ell} m={self.m}"
            )
        if self.k < 1:
            raise ValueError(f"block count must be >= 1, got {self.k}")
        if self.ell + self.p * (self.k - 1) != self.m:
            raise ValueError(
                f"inconsistent scheme: ell + p*(k-1) = "
                f"{self.ell + self.p * (self.k - 1)} != m = {self.m}"
            )


def blocking_params(m: int, p: int) -> BlockingScheme:
    """Choose the block length for a given advance.

    For p >= 1, among all ell with ell + p*(k-1) == m and p <= ell, pick
    the one maximizing min(k, ell) (the rank budget), breaking ties
    toward larger ell. p = NO_OVERLAP requests abutting blocks: the
    factor pair k*ell == m maximizing min(k, ell), ties toward ell >= k,
    with p set to ell.
    """
    m, p = int(m), int(p)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if p == NO_OVERLAP:
        best = None
        for ell in range(1, m + 1):
            if m % ell:
                continue
            k = m // ell
            key = (min(k, ell), ell)
            if best is None or key > best[0]:
                best = (key, ell, k)
        _, ell, k = best
        return BlockingScheme(m=m, ell=ell, p=ell, k=k)
    if not 1 <= p <= m:
        raise ValueError(f"p must lie in [1, m], got p={p}, m={m}")
    best = None
    for ell in range(p, m + 1):
        if (m - ell) % p:
            continue
        k = (m - ell) // p + 1
        key = (min(k, ell), ell)
        if best is None or key > best[0]:
            best = (key, ell, k)
    if best is None:
        raise InfeasibleError(f"no feasible block length for m={m}, p={p}")
    _, ell, k = best
    return BlockingScheme(m=m, ell=ell, p=p, k=k)


def _block_index_grid(ell: int, p: int, k: int) -> np.ndarray:
    return np.arange(ell)[:, None] + p * np.arange(k)[None, :]


def extract_blocks(b, scheme: BlockingScheme) -> np.ndarray:
    """Reshape a length-m vector into its ell x k block matrix.

    Column i holds samples p*i .. p*i + ell - 1 of b. With p == ell this
    is a plain column-major reshape.
    """
    b = as_complex_vector(b, "b")
    if b.shape[0] != scheme.m:
        raise DimensionMismatch(
            f"vector length {b.shape[0]} does not match scheme m={scheme.m}"
        )
    return b[_block_index_grid(scheme.ell, scheme.p, scheme.k)]


@dataclass
class MeasurementDesign:
    """Khatri-Rao factor pair plus the blocking scheme it supports.

    left is the slow factor (k x N matrix, or a VandermondeSpec for
    overlapping schemes), right the fast factor (ell x N or p x N).
    """

    kind: str
    left: object
    right: np.ndarray
    scheme: BlockingScheme
    n_signal: int


def build_nonoverlap_design(phi, psi) -> MeasurementDesign:
    """Design A = khatri_rao(phi, psi) for abutting blocks (p = ell).

    phi is k x N, psi is ell x N. The materialized matrix has k*ell
    rows and unit-norm columns.
    """
    phi = as_complex_matrix(phi, "phi")
    psi = as_complex_matrix(psi, "psi")
    if phi.shape[1] != psi.shape[1]:
        raise DimensionMismatch(
            f"factor column counts differ: {phi.shape[1]} vs {psi.shape[1]}"
        )
    k, n_signal = phi.shape
    ell = psi.shape[0]
    scheme = BlockingScheme(m=k * ell, ell=ell, p=ell, k=k)
    return MeasurementDesign(
        kind="nonoverlap",
        left=phi.copy(),
        right=psi.copy(),
        scheme=scheme,
        n_signal=n_signal,
    )


def build_overlap_design(
    v: VandermondeSpec, psi, m: int, p: int
) -> MeasurementDesign:
    """Design A = first m rows of khatri_rao(V, psi), blocks advancing by p.

    V must provide ceil(m/p) power rows and psi must be p x N with one
    column per generator. The returned scheme comes from
    blocking_params(m, p).
    """
    psi = as_complex_matrix(psi, "psi")
    m, p = int(m), int(p)
    if p < 1:
        raise ValueError(f"overlap advance must be >= 1, got {p}")
    need_rows = ceil(m / p)
    if v.n != need_rows:
        raise DimensionMismatch(
            f"Vandermonde factor has {v.n} power rows, need ceil(m/p)={need_rows}"
        )
    if psi.shape[0] != p:
        raise DimensionMismatch(f"psi has {psi.shape[0]} rows, need p={p}")
    if psi.shape[1] != v.m:
        raise DimensionMismatch(
            f"psi has {psi.shape[1]} columns, Vandermonde factor has {v.m}"
        )
    scheme = blocking_params(m, p)
    return MeasurementDesign(
        kind="overlap",
        left=v,
        right=psi.copy(),
        scheme=scheme,
        n_signal=psi.shape[1],
    )


def design_matrix(design: MeasurementDesign) -> np.ndarray:
    """Materialize the m x N sensing matrix with unit-norm columns."""
    if design.kind == "nonoverlap":
        a = khatri_rao(design.left, design.right)
    else:
        full = khatri_rao(materialize(design.left), design.right)
        a = full[: design.scheme.m]
    return normalize_columns(a)


@dataclass
class DesignReport:
    """Outcome of the Kruskal-rank conditions for a requested order r."""

    ok: bool
    r: int
    checks: dict


def verify_design(design: MeasurementDesign, r: int) -> DesignReport:
    """Check the rank conditions guaranteeing rank(B) == s for all s <= r.

    Non-overlapping designs need both factors to have Kruskal rank at
    least r. Overlapping designs need it of the first k power rows of
    the Vandermonde factor and of the effective block factor (the first
    ell rows of the ceil(ell/p)-row Vandermonde khatri_rao'd with psi).
    Brute force; subject to the subset budget of kruskal_rank.
    """
    r = int(r)
    scheme = design.scheme
    budget = min(scheme.k, scheme.ell)
    if not 1 <= r <= budget:
        raise ValueError(f"r must lie in [1, min(k, ell)] = [1, {budget}], got {r}")
    checks = {}
    if design.kind == "nonoverlap":
        checks["left_factor"] = kruskal_rank(design.left, r)
        checks["right_factor"] = kruskal_rank(design.right, r)
    else:
        v: VandermondeSpec = design.left
        v_rows = materialize(v)
        checks["vander_first_k_rows"] = kruskal_rank(v_rows[: scheme.k], r)
        sub_rows = ceil(scheme.ell / scheme.p)
        sub_v = VandermondeSpec(n=sub_rows, generators=v.generators)
        psi_hat = khatri_rao(materialize(sub_v), design.right)[: scheme.ell]
        checks["effective_block_factor"] = kruskal_rank(psi_hat, r)
    ok = all(val >= r for val in checks.values())
    return DesignReport(ok=ok, r=r, checks=checks)


def noise_gram_check(scheme: BlockingScheme, trials: int, rng_seed) -> float:
    """Monte-Carlo check of the block-noise whitening identity.

    Unit-variance circular complex noise vectors of length m, reshaped
    to blocks N, satisfy E[N N^H] = k * I even when blocks overlap.
    Returns the relative Frobenius deviation of the empirical mean.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(rng_seed)
    idx = _block_index_grid(scheme.ell, scheme.p, scheme.k)
    gram = np.zeros((scheme.ell, scheme.ell), dtype=np.complex128)
    done = 0
    while done < trials:
        chunk = min(trials - done, 4096)
        z = rng.standard_normal((2, chunk, scheme.m))
        noise = (z[0] + 1j * z[1]) / np.sqrt(2.0)
        blocks = noise[:, idx]
        gram += np.einsum("tik,tjk->ij", blocks, blocks.conj())
        done += chunk
    gram /= trials
    target = scheme.k * np.eye(scheme.ell)
    return float(
        np.linalg.norm(gram - target) / np.linalg.norm(target)
    )


@dataclass
class ThresholdCalibration:
    """Per-index singular-value acceptance thresholds for pure noise."""

    ell: int
    k: int
    p: int
    noise_variance: float
    pfa: float
    trials: int
    seed: int
    thresholds: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        if self.thresholds.shape != (min(self.ell, self.k),):
            raise ValueError(
                f"need {min(self.ell, self.k)} thresholds, "
                f"got {self.thresholds.shape}"
            )
        if not np.all(self.thresholds > 0):
            raise ValueError("thresholds must be positive")
        if np.any(np.diff(self.thresholds) > 0):
            raise ValueError("thresholds must be non-increasing")
        if not 0.0 < self.pfa < 0.5:
            raise ValueError(f"pfa must lie in (0, 0.5), got {self.pfa}")
        if not 1 <= self.p <= self.ell:
            raise ValueError(f"need 1 <= p <= ell, got p={self.p} ell={self.ell}")


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def calibrate_thresholds(
    ell: int,
    k: int,
    noise_variance: float,
    pfa: float,
    trials: int,
    rng_seed,
    p: int | None = None,
) -> ThresholdCalibration:
    """Monte-Carlo calibration of the rank-test thresholds.

    Draws pure-noise measurement vectors, reshapes them with the same
    block geometry as the data (p defaults to ell, the iid case), and
    records for each candidate order j the (1-pfa)-quantile of the
    largest singular value of the noise deflated to its trailing
    (ell-j+1) x (k-j+1) corner. Deflation is realized by a fixed Haar
    rotation pair so that one batch of matrices serves every j; for
    p = ell this matches the iid null exactly by rotation invariance.

    One RNG substream is derived per trial index, so any parallel
    execution order reproduces the sequential result. Deterministic
    given rng_seed.
    """
    ell, k, trials = int(ell), int(k), int(trials)
    if ell < 1 or k < 1:
        raise ValueError(f"need ell, k >= 1, got ell={ell}, k={k}")
    if p is None:
        p = ell
    p = int(p)
    if not 1 <= p <= ell:
        raise ValueError(f"need 1 <= p <= ell, got p={p}, ell={ell}")
    if not 0.0 < pfa < 0.5:
        raise ValueError(f"pfa must lie in (0, 0.5), got {pfa}")
    if noise_variance <= 0:
        raise ValueError(f"noise_variance must be > 0, got {noise_variance}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    m = ell + p * (k - 1)
    root = np.random.SeedSequence(rng_seed)
    rot_ss, trials_root = root.spawn(2)
    scale = np.sqrt(noise_variance / 2.0)
    noise = np.empty((trials, m), dtype=np.complex128)
    for t, child in enumerate(trials_root.spawn(trials)):
        z = np.random.default_rng(child).standard_normal((2, m))
        noise[t] = scale * (z[0] + 1j * z[1])

    idx = _block_index_grid(ell, p, k)
    blocks = noise[:, idx]
    rot_rng = np.random.default_rng(rot_ss)
    u = _haar_unitary(ell, rot_rng)
    w = _haar_unitary(k, rot_rng)
    rotated = np.einsum("li,tlk->tik", u.conj(), blocks) @ w

    n_thr = min(ell, k)
    thresholds = np.empty(n_thr)
    for j in range(n_thr):
        top = np.linalg.svd(rotated[:, j:, j:], compute_uv=False)[:, 0]
        thresholds[j] = np.quantile(top, 1.0 - pfa)
    thresholds = np.minimum.accumulate(thresholds)

    return ThresholdCalibration(
        ell=ell,
        k=k,
        p=p,
        noise_variance=float(noise_variance),
        pfa=float(pfa),
        trials=trials,
        seed=int(rng_seed),
        thresholds=thresholds,
    )


def estimate_order(b_hat, cal: ThresholdCalibration) -> int:
    """Greedy rank decision: count singular values clearing their thresholds.

    Returns the largest j such that every singular value sigma_i with
    i <= j exceeds thresholds[i]; 0 when already the largest singular
    value looks like noise.
    """
    b_hat = as_complex_matrix(b_hat, "b_hat")
    if b_hat.shape != (cal.ell, cal.k):
        raise DimensionMismatch(
            f"matrix is {b_hat.shape}, calibration is for ({cal.ell}, {cal.k})"
        )
    sv = singular_values(b_hat)
    order = 0
    for j in range(cal.thresholds.shape[0]):
        if sv[j] <= cal.thresholds[j]:
            break
        order = j + 1
    return order


def estimate_order_noiseless(b, rel_tol: float = 1e-8) -> int:
    """Exact-arithmetic stand-in: the numerical rank of the block matrix."""
    return numerical_rank(b, rel_tol)


def save_calibration(path, cal: ThresholdCalibration) -> None:
    """Write a calibration table as CSV; values round-trip exactly.

    The iid case (p == ell) uses the compact header without the p
    column; overlap-aware calibrations carry p explicitly.
    """
    var, pfa = float(cal.noise_variance), float(cal.pfa)
    if cal.p == cal.ell:
        names = "ell,k,variance,pfa,trials,seed"
        values = f"{cal.ell},{cal.k},{var!r},{pfa!r},{cal.trials},{cal.seed}"
    else:
        names = "ell,k,p,variance,pfa,trials,seed"
        values = (
            f"{cal.ell},{cal.k},{cal.p},{var!r},{pfa!r},{cal.trials},{cal.seed}"
        )
    lines = [names, values]
    for j, thr in enumerate(cal.thresholds, start=1):
        lines.append(f"{j},{float(thr)!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_calibration(path) -> ThresholdCalibration:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise ValueError("calibration file too short")
    names = lines[0].split(",")
    values = lines[1].split(",")
    if names == ["ell", "k", "variance", "pfa", "trials", "seed"]:
        ell, k = int(values[0]), int(values[1])
        p = ell
        variance, pfa = float(values[2]), float(values[3])
        trials, seed = int(values[4]), int(values[5])
    elif names == ["ell", "k", "p", "variance", "pfa", "trials", "seed"]:
        ell, k, p = int(values[0]), int(values[1]), int(values[2])
        variance, pfa = float(values[3]), float(values[4])
        trials, seed = int(values[5]), int(values[6])
    else:
        raise ValueError(f"unrecognized calibration header: {lines[0]!r}")
    thresholds = np.empty(len(lines) - 2)
    for row, line in enumerate(lines[2:]):
        j_str, thr_str = line.split(",")
        if int(j_str) != row + 1:
            raise ValueError(f"threshold rows out of order at line {row + 3}")
        thresholds[row] = float(thr_str)
    return ThresholdCalibration(
        ell=ell,
        k=k,
        p=p,
        noise_variance=variance,
        pfa=pfa,
        trials=trials,
        seed=seed,
        thresholds=thresholds,
    )


class CalibrationCache:
    """Memo for calibration tables, optionally persisted to a directory.

    Each entry's RNG seed is derived by hashing the cache key together
    with the caller's master seed, so whether an entry is recomputed,
    served from memory, or read back from disk can never change any
    downstream number. Unreadable or stale cache files are recomputed
    and rewritten.
    """

    def __init__(self, cache_dir=None):
        self._entries = {}
        self._lock = threading.Lock()
        self.cache_dir = cache_dir

    @staticmethod
    def _key_string(
        ell: int, k: int, p: int, noise_variance: float,
        pfa: float, trials: int, master_seed: int,
    ) -> str:
        return (
            f"ell={ell},k={k},p={p},var={float(noise_variance)!r},"
            f"pfa={float(pfa)!r},trials={trials},master={master_seed}"
        )

    @classmethod
    def derive_seed(
        cls, ell: int, k: int, p: int, noise_variance: float,
        pfa: float, trials: int, master_seed: int,
    ) -> int:
        key = cls._key_string(ell, k, p, noise_variance, pfa, trials, master_seed)
        return int.from_bytes(blake2s(key.encode()).digest()[:8], "big")

    def _path_for(self, key_string: str):
        digest = blake2s(key_string.encode()).hexdigest()[:16]
        return os.path.join(self.cache_dir, f"mos_{digest}.csv")

    def _load_from_disk(self, key_string: str, seed: int):
        path = self._path_for(key_string)
        if not os.path.exists(path):
            return None
        try:
            cal = load_calibration(path)
        except (OSError, ValueError):
            return None
        # The filename encodes every parameter, but guard against a
        # hash collision or a hand-edited file.
        return cal if cal.seed == seed else None

    def get(
        self, ell: int, k: int, p: int, noise_variance: float,
        pfa: float, trials: int, master_seed: int,
    ) -> ThresholdCalibration:
        key = (ell, k, p, float(noise_variance), float(pfa), trials, master_seed)
        with self._lock:
            cal = self._entries.get(key)
            if cal is None:
                key_string = self._key_string(
                    ell, k, p, noise_variance, pfa, trials, master_seed
                )
                seed = self.derive_seed(
                    ell, k, p, noise_variance, pfa, trials, master_seed
                )
                if self.cache_dir is not None:
                    cal = self._load_from_disk(key_string, seed)
                if cal is None:
                    cal = calibrate_thresholds(
                        ell, k, noise_variance, pfa, trials, seed, p=p
                    )
                    if self.cache_dir is not None:
                        os.makedirs(self.cache_dir, exist_ok=True)
                        save_calibration(self._path_for(key_string), cal)
                self._entries[key] = cal
        return cal
