"""Monte-Carlo experiment harness: scenario configs, signal/noise
generation, sensing-matrix zoo, and the SNR sweeps behind the CSV
outputs.

Reproducibility contract: every number an experiment emits is a pure
function of (config, seed). The master seed spawns one substream for
matrix construction and one per (snr, trial) pair, so trials can run
on any number of worker threads, in any order, without changing a
byte of output. Threshold calibrations derive their own seeds by
hashing their parameter key, which makes them insensitive to cache
state as well.

Scale note: the default config is desk-scale (N=128, 200 trials) so
the full suite runs in minutes. Paper-scale protocols (N=512, 2000
trials, m=121/169/96) are plain config changes.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import floor

import numpy as np

from .errors import ConfigError, InfeasibleError
from .linalg import coherence, normalize_columns
from .recovery import SparseSignal, l2_error, omp, support_success
from .soe import (
    BlockingScheme,
    CalibrationCache,
    MeasurementDesign,
    blocking_params,
    build_nonoverlap_design,
    build_overlap_design,
    design_matrix,
    estimate_order,
    extract_blocks,
)
from .validation import as_complex_vector
from .vandermonde import (
    VandermondeSpec,
    design_low_coherence,
    materialize,
    optimal_radius,
)

logger = logging.getLogger(__name__)

AMPLITUDE_SET = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])

MATRIX_KINDS = (
    "GaussianKR",
    "VanderKR",
    "GaussianDense",
    "VanderUniform",
    "VanderGrid",
    "VanderAlg1",
)
_KR_KINDS = ("GaussianKR", "VanderKR")

UNGUIDED_STEPS_WIDE = 40
UNGUIDED_STEPS_NARROW = 20

DESK_DEFAULTS = {
    "N": 128,
    "m": 64,
    "p": 0,
    "K": 6,
    "snr_start_db": 0.0,
    "snr_stop_db": 50.0,
    "snr_step_db": 5.0,
    "trials": 200,
    "seed": 1234,
    "matrix_kind": "GaussianKR",
    "structured_support": False,
    "mos_pfa": 0.005,
    "mos_trials": 2000,
}

_INT_KEYS = ("N", "m", "p", "K", "trials", "seed", "mos_trials")
_FLOAT_KEYS = ("snr_start_db", "snr_stop_db", "snr_step_db", "mos_pfa")
_BOOL_KEYS = ("structured_support",)
_STR_KEYS = ("matrix_kind",)
CONFIG_KEYS = _INT_KEYS + _FLOAT_KEYS + _BOOL_KEYS + _STR_KEYS


@dataclass
class ScenarioConfig:
    """One experiment's parameters; every field has a desk-scale default."""

    N: int = 128
    m: int = 64
    p: int = 0
    K: int = 6
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0)
    trials: int = 200
    seed: int = 1234
    matrix_kind: str = "GaussianKR"
    structured_support: bool = False
    mos_pfa: float = 0.005
    mos_trials: int = 2000

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise ConfigError(f"N and m must be >= 1, got N={self.N}, m={self.m}")
        if self.p < 0 or (self.p > 0 and self.p > self.m):
            raise ConfigError(f"p must be 0 (no overlap) or in [1, m], got {self.p}")
        if not 0 <= self.K <= self.N:
            raise ConfigError(f"K must lie in [0, N], got K={self.K}, N={self.N}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.mos_trials < 1:
            raise ConfigError(f"mos_trials must be >= 1, got {self.mos_trials}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.matrix_kind not in MATRIX_KINDS:
            raise ConfigError(
                f"matrix_kind must be one of {MATRIX_KINDS}, got {self.matrix_kind!r}"
            )
        if not 0.0 < self.mos_pfa < 0.5:
            raise ConfigError(f"mos_pfa must lie in (0, 0.5), got {self.mos_pfa}")
        grid = tuple(float(v) for v in self.snr_grid_db)
        if not grid:
            raise ConfigError("SNR grid is empty")
        self.snr_grid_db = grid


@dataclass
class TrialRecord:
    """Outcome of one Monte-Carlo trial; aggregated into CSV rows."""

    snr_db: float
    trial_index: int
    true_order: int
    estimated_order: int | None = None
    soe_correct: bool | None = None
    omp_l2_error: float | None = None
    support_correct: bool | None = None

    def __post_init__(self):
        if self.estimated_order is not None and self.estimated_order < 0:
            raise ValueError("estimated_order must be >= 0")


def snr_to_variance(snr_db: float) -> float:
    """Per-entry complex noise variance for an SNR given in dB."""
    return float(10.0 ** (-float(snr_db) / 10.0))


def snr_grid(start_db: float, stop_db: float, step_db: float) -> tuple:
    if step_db <= 0:
        raise ConfigError(f"snr_step_db must be > 0, got {step_db}")
    if stop_db < start_db:
        raise ConfigError("snr_stop_db must be >= snr_start_db")
    n = int(floor((stop_db - start_db) / step_db + 0.5)) + 1
    return tuple(float(start_db + i * step_db) for i in range(n))


def parse_config_text(text: str) -> dict:
    """Parse flat `key = value` lines; `#` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        raw[key] = value
    return raw


def _coerce(key: str, value):
    if not isinstance(value, str):
        return value
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            low = value.lower()
            if low in ("true", "false"):
                return low == "true"
            raise ValueError(value)
    except ValueError:
        raise ConfigError(f"config key {key!r} has invalid value {value!r}") from None
    return value


def build_scenario_config(values: dict) -> ScenarioConfig:
    merged = dict(DESK_DEFAULTS)
    merged.update(values)
    merged = {k: _coerce(k, v) for k, v in merged.items()}
    grid = snr_grid(
        merged.pop("snr_start_db"),
        merged.pop("snr_stop_db"),
        merged.pop("snr_step_db"),
    )
    return ScenarioConfig(snr_grid_db=grid, **merged)


def load_config(path=None, preset_defaults: dict | None = None) -> ScenarioConfig:
    """Read a config file, with preset defaults filling absent keys only."""
    values = {}
    if preset_defaults:
        for key in preset_defaults:
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown preset key {key!r}")
        values.update(preset_defaults)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_values = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(file_values)
    return build_scenario_config(values)


def sample_signal(N: int, K: int, structured: bool, n_rows: int, rng) -> SparseSignal:
    """Draw a K-sparse signal with four-point amplitudes of modulus sqrt(2).

    The support is uniform over K-subsets. With structured=True the
    support is rejection-sampled until, interpreting index j as the
    angle 2*pi*j/N, all pairwise circular gaps exceed 2*pi/n_rows;
    i.e. consecutive support indices (cyclically) differ by more than
    N/n_rows. Draw order is support first, then amplitudes.
    """
    N, K = int(N), int(K)
    if not 0 <= K <= N:
        raise ValueError(f"need 0 <= K <= N, got K={K}, N={N}")
    if K == 0:
        return SparseSignal(dim=N, support=[], amplitudes=[])
    if structured and K > 1:
        min_gap = N // n_rows + 1
        if K * min_gap > N:
            raise InfeasibleError(
                f"cannot place {K} indices on {N} slots with circular "
                f"gaps > {N}/{n_rows}"
            )
        for _ in range(100000):
            support = np.sort(rng.choice(N, size=K, replace=False))
            gaps = np.diff(support, append=support[0] + N)
            if np.all(gaps >= min_gap):
                break
        else:
            raise InfeasibleError(
                f"structured support sampling did not succeed in 100000 draws "
                f"(N={N}, K={K}, n_rows={n_rows})"
            )
    else:
        support = np.sort(rng.choice(N, size=K, replace=False))
    amplitudes = AMPLITUDE_SET[rng.integers(0, 4, size=K)]
    return SparseSignal(dim=N, support=support, amplitudes=amplitudes)


def add_noise(b, sigma2: float, rng) -> np.ndarray:
    """Add circular complex Gaussian noise with per-entry variance sigma2.

    sigma2 = 0 returns a copy of b without consuming any RNG draws.
    """
    b = as_complex_vector(b, "b")
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    if sigma2 == 0:
        return b.copy()
    z = rng.standard_normal((2, b.shape[0]))
    return b + np.sqrt(sigma2 / 2.0) * (z[0] + 1j * z[1])


def _gaussian(rows: int, cols: int, rng) -> np.ndarray:
    z = rng.standard_normal((2, rows, cols))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def build_kr_design(kind: str, n_signal: int, m: int, p: int, rng) -> MeasurementDesign:
    """Khatri-Rao sensing design for a blocking-capable scenario.

    p = 0 requests abutting blocks: the factors are k x N and ell x N
    with k*ell = m; GaussianKR draws both from the Gaussian ensemble,
    VanderKR uses the two-ring Vandermonde design (at its optimal
    radius) for the slow factor. p >= 1 builds the overlap design: the
    slow factor must be Vandermonde for the block-shift structure to
    exist, so both kinds share it and draw a Gaussian p x N fast
    factor.
    """
    if kind not in _KR_KINDS:
        raise ConfigError(f"matrix kind {kind!r} does not define a blocking design")
    if p == 0:
        scheme = blocking_params(m, 0)
        if kind == "GaussianKR":
            phi = _gaussian(scheme.k, n_signal, rng)
        else:
            vspec = design_low_coherence(
                scheme.k, n_signal, optimal_radius(scheme.k, n_signal)
            )
            phi = materialize(vspec)
        psi = _gaussian(scheme.ell, n_signal, rng)
        return build_nonoverlap_design(phi, psi)
    scheme = blocking_params(m, p)
    n_rows = -(-m // p)
    vspec = design_low_coherence(n_rows, n_signal, optimal_radius(n_rows, n_signal))
    psi = _gaussian(p, n_signal, rng)
    return build_overlap_design(vspec, psi, m, p)


def build_plain_matrix(kind: str, n_signal: int, m: int, rng) -> np.ndarray:
    """Unstructured (for blocking purposes) m x N sensing matrices."""
    if kind == "GaussianDense":
        a = _gaussian(m, n_signal, rng)
    elif kind == "VanderUniform":
        angles = 2.0 * np.pi * rng.random(n_signal)
        a = materialize(VandermondeSpec(n=m, generators=np.exp(1j * angles)))
    elif kind == "VanderGrid":
        angles = 2.0 * np.pi * np.arange(n_signal) / n_signal
        a = materialize(VandermondeSpec(n=m, generators=np.exp(1j * angles)))
    elif kind == "VanderAlg1":
        a = materialize(
            design_low_coherence(m, n_signal, optimal_radius(m, n_signal))
        )
    else:
        raise ConfigError(f"unknown plain matrix kind {kind!r}")
    return normalize_columns(a)


def scenario_matrix(kind: str, n_signal: int, m: int, p: int, rng):
    """Materialize any matrix kind; returns (matrix, scheme_or_None)."""
    if kind in _KR_KINDS:
        design = build_kr_design(kind, n_signal, m, p, rng)
        return design_matrix(design), design.scheme
    return build_plain_matrix(kind, n_signal, m, rng), None


def worker_count() -> int:
    """Thread budget from SOESTIM_THREADS (0 or unset = one per CPU)."""
    env = os.environ.get("SOESTIM_THREADS")
    if env is None or env.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(
            f"SOESTIM_THREADS must be an integer, got {env!r}"
        ) from None
    if n < 0:
        raise ConfigError(f"SOESTIM_THREADS must be >= 0, got {n}")
    if n == 0:
        return os.cpu_count() or 1
    return n


def map_trials(fn, items) -> list:
    """Run fn over items, preserving order; thread count per worker_count."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass
class SweepTable:
    """CSV-shaped sweep result: named columns, one row per SNR point."""

    columns: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match column count")
            cells = [f"{float(row[0]):g}"]
            cells += [repr(float(v)) for v in row[1:]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def write_csv(path, table: SweepTable) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(table.to_csv())


def _seed_streams(cfg: ScenarioConfig):
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(1 + len(cfg.snr_grid_db))
    return children[0], children[1:]


def _require_kr(cfg: ScenarioConfig) -> None:
    if cfg.matrix_kind not in _KR_KINDS:
        raise ConfigError(
            f"this sweep needs a blocking-capable matrix_kind "
            f"(one of {_KR_KINDS}), got {cfg.matrix_kind!r}"
        )


def run_soe_sweep(cfg: ScenarioConfig, cache: CalibrationCache | None = None) -> SweepTable:
    """Order-estimation accuracy vs SNR (one overlap setting).

    Columns: SNR, soe_mean (average estimated order), soe_succ
    (fraction of trials estimating exactly K).
    """
    _require_kr(cfg)
    cache = cache if cache is not None else CalibrationCache()
    matrix_ss, snr_streams = _seed_streams(cfg)
    design = build_kr_design(
        cfg.matrix_kind, cfg.N, cfg.m, cfg.p, np.random.default_rng(matrix_ss)
    )
    a = design_matrix(design)
    scheme = design.scheme

    table = SweepTable(columns=["SNR", "soe_mean", "soe_succ"])
    for snr_db, snr_ss in zip(cfg.snr_grid_db, snr_streams):
        sigma2 = snr_to_variance(snr_db)
        cal = cache.get(
            scheme.ell, scheme.k, scheme.p, sigma2,
            cfg.mos_pfa, cfg.mos_trials, cfg.seed,
        )

        def one_trial(task):
            index, child = task
            rng = np.random.default_rng(child)
            x = sample_signal(cfg.N, cfg.K, cfg.structured_support, cfg.m, rng)
            b = add_noise(a @ x.dense(), sigma2, rng)
            est = estimate_order(extract_blocks(b, scheme), cal)
            return TrialRecord(
                snr_db=snr_db,
                trial_index=index,
                true_order=cfg.K,
                estimated_order=est,
                soe_correct=est == cfg.K,
            )

        records = map_trials(one_trial, enumerate(snr_ss.spawn(cfg.trials)))
        mean_order = sum(r.estimated_order for r in records) / len(records)
        succ = sum(r.soe_correct for r in records) / len(records)
        table.rows.append((snr_db, mean_order, succ))
    return table


def run_guided_omp_sweep(
    cfg: ScenarioConfig, cache: CalibrationCache | None = None
) -> SweepTable:
    """Reconstruction error with the order estimate steering OMP.

    Per trial the same measurement is decoded three ways: OMP run for
    the estimated order, and OMP run for the fixed step bounds 40 and
    20 (clamped to the matrix size). Columns: SNR, omp_soe_MSE,
    omp_gauss_MSE_max1, omp_gauss_MSE_max2, soe_succ; the MSE columns
    are mean l2 errors.
    """
    _require_kr(cfg)
    cache = cache if cache is not None else CalibrationCache()
    matrix_ss, snr_streams = _seed_streams(cfg)
    design = build_kr_design(
        cfg.matrix_kind, cfg.N, cfg.m, cfg.p, np.random.default_rng(matrix_ss)
    )
    a = design_matrix(design)
    scheme = design.scheme
    step_cap = min(cfg.m, cfg.N)
    steps_wide = min(UNGUIDED_STEPS_WIDE, step_cap)
    steps_narrow = min(UNGUIDED_STEPS_NARROW, step_cap)

    table = SweepTable(
        columns=[
            "SNR",
            "omp_soe_MSE",
            "omp_gauss_MSE_max1",
            "omp_gauss_MSE_max2",
            "soe_succ",
        ]
    )
    for snr_db, snr_ss in zip(cfg.snr_grid_db, snr_streams):
        sigma2 = snr_to_variance(snr_db)
        cal = cache.get(
            scheme.ell, scheme.k, scheme.p, sigma2,
            cfg.mos_pfa, cfg.mos_trials, cfg.seed,
        )

        def one_trial(task):
            index, child = task
            rng = np.random.default_rng(child)
            x = sample_signal(cfg.N, cfg.K, cfg.structured_support, cfg.m, rng)
            b = add_noise(a @ x.dense(), sigma2, rng)
            est = estimate_order(extract_blocks(b, scheme), cal)
            guided = omp(a, b, min(est, step_cap))
            wide = omp(a, b, steps_wide)
            narrow = omp(a, b, steps_narrow)
            return (
                TrialRecord(
                    snr_db=snr_db,
                    trial_index=index,
                    true_order=cfg.K,
                    estimated_order=est,
                    soe_correct=est == cfg.K,
                    omp_l2_error=l2_error(guided.estimate, x),
                ),
                l2_error(wide.estimate, x),
                l2_error(narrow.estimate, x),
            )

        results = map_trials(one_trial, enumerate(snr_ss.spawn(cfg.trials)))
        n = len(results)
        guided_mean = sum(r.omp_l2_error for r, _, _ in results) / n
        wide_mean = sum(w for _, w, _ in results) / n
        narrow_mean = sum(v for _, _, v in results) / n
        succ = sum(r.soe_correct for r, _, _ in results) / n
        table.rows.append((snr_db, guided_mean, wide_mean, narrow_mean, succ))
    return table


def run_structure_cost_sweep(cfg: ScenarioConfig) -> SweepTable:
    """Price of blocking structure: known-K OMP on the Khatri-Rao design
    vs a dense Gaussian matrix, sharing signal and noise per trial.

    Columns: SNR, omp_nosoe_MSE (structured matrix), omp_gauss_MSE_true
    (dense Gaussian baseline, true K steps both).
    """
    _require_kr(cfg)
    if cfg.K < 1:
        raise ConfigError("this sweep needs K >= 1")
    matrix_ss, snr_streams = _seed_streams(cfg)
    matrix_rng = np.random.default_rng(matrix_ss)
    design = build_kr_design(cfg.matrix_kind, cfg.N, cfg.m, cfg.p, matrix_rng)
    a_kr = design_matrix(design)
    a_dense = build_plain_matrix("GaussianDense", cfg.N, cfg.m, matrix_rng)
    mu_kr = coherence(a_kr)
    mu_dense = coherence(a_dense)
    logger.info(
        "coherence audit: structured=%.4f gaussian=%.4f ratio=%.2f",
        mu_kr, mu_dense, mu_kr / mu_dense,
    )
    steps = min(cfg.K, cfg.m, cfg.N)

    table = SweepTable(columns=["SNR", "omp_nosoe_MSE", "omp_gauss_MSE_true"])
    for snr_db, snr_ss in zip(cfg.snr_grid_db, snr_streams):
        sigma2 = snr_to_variance(snr_db)

        def one_trial(task):
            index, child = task
            rng = np.random.default_rng(child)
            x = sample_signal(cfg.N, cfg.K, cfg.structured_support, cfg.m, rng)
            xd = x.dense()
            noise = add_noise(np.zeros(cfg.m, dtype=np.complex128), sigma2, rng)
            err_kr = l2_error(omp(a_kr, a_kr @ xd + noise, steps).estimate, x)
            err_dense = l2_error(omp(a_dense, a_dense @ xd + noise, steps).estimate, x)
            return err_kr, err_dense

        results = map_trials(one_trial, enumerate(snr_ss.spawn(cfg.trials)))
        n = len(results)
        table.rows.append(
            (
                snr_db,
                sum(e for e, _ in results) / n,
                sum(g for _, g in results) / n,
            )
        )
    return table


_VANDER_LINEUP = ("VanderUniform", "VanderGrid", "VanderAlg1", "GaussianDense")


def run_vander_comparison(cfg: ScenarioConfig) -> SweepTable:
    """Support detection and error for the Vandermonde matrix lineup.

    Requires structured supports (the angular-gap model). Four matrices
    share every trial's signal and noise: random-circle Vandermonde,
    regular-grid Vandermonde, the two-ring design at its optimal
    radius, and a dense Gaussian reference. OMP runs for the true K.
    """
    if not cfg.structured_support:
        raise ConfigError("run_vander_comparison requires structured_support = true")
    if cfg.K < 1:
        raise ConfigError("this sweep needs K >= 1")
    matrix_ss, snr_streams = _seed_streams(cfg)
    matrix_rng = np.random.default_rng(matrix_ss)
    matrices = [
        build_plain_matrix(kind, cfg.N, cfg.m, matrix_rng)
        for kind in _VANDER_LINEUP
    ]
    steps = min(cfg.K, cfg.m, cfg.N)

    table = SweepTable(
        columns=[
            "SNR",
            "vand_rnd_supp",
            "vand_reg_supp",
            "vand_opt_supp",
            "rnd_supp",
            "vand_rnd_MSE",
            "vand_reg_MSE",
            "vand_opt_MSE",
            "rnd_MSE",
        ]
    )
    for snr_db, snr_ss in zip(cfg.snr_grid_db, snr_streams):
        sigma2 = snr_to_variance(snr_db)

        def one_trial(task):
            index, child = task
            rng = np.random.default_rng(child)
            x = sample_signal(cfg.N, cfg.K, True, cfg.m, rng)
            xd = x.dense()
            noise = add_noise(np.zeros(cfg.m, dtype=np.complex128), sigma2, rng)
            hits = []
            errors = []
            for mat in matrices:
                result = omp(mat, mat @ xd + noise, steps)
                hits.append(support_success(result.estimate, x))
                errors.append(l2_error(result.estimate, x))
            return hits, errors

        results = map_trials(one_trial, enumerate(snr_ss.spawn(cfg.trials)))
        n = len(results)
        rates = [sum(h[i] for h, _ in results) / n for i in range(4)]
        mses = [sum(e[i] for _, e in results) / n for i in range(4)]
        table.rows.append((snr_db, *rates, *mses))
    return table
