"""Acceptance gate: twelve timed end-to-end checks of the package.

Each test prints one [PASS]/[FAIL] line (visible under pytest -s) with
its runtime and budget, then asserts both the outcome and the budget.
"""

import time

import numpy as np
import pytest

from soestim import (
    BlockingScheme,
    EnvelopeParams,
    ScenarioConfig,
    blocking_params,
    build_nonoverlap_design,
    build_overlap_design,
    calibrate_thresholds,
    coherence,
    coherence_bounds,
    correlation_envelopes,
    design_low_coherence,
    design_matrix,
    estimate_order,
    extract_blocks,
    kmax_from_coherence,
    materialize,
    noise_gram_check,
    numerical_rank,
    omp,
    optimal_radius,
    orthogonal_design,
    pair_correlation_sq,
    run_soe_sweep,
    run_vander_comparison,
    sample_signal,
    support_success,
)
from soestim.cli import main as cli_main
from soestim.harness import build_plain_matrix


def _gate(num, label, limit_s, ok, elapsed, detail=""):
    status = "PASS" if (ok and elapsed < limit_s) else "FAIL"
    extra = f" [{detail}]" if detail else ""
    print(
        f"[{status}] criterion {num}: {label}{extra} "
        f"({elapsed:.2f}s, limit {limit_s:g}s)"
    )
    assert ok, f"criterion {num} failed: {label}{extra}"
    assert elapsed < limit_s, (
        f"criterion {num} exceeded its {limit_s:g}s budget: {elapsed:.2f}s"
    )


def _complex_gaussian(rng, *shape):
    z = rng.standard_normal((2, *shape))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def _rank_identity_fraction(design, rng, orders=range(1, 9), draws=50):
    a = design_matrix(design)
    n_signal = a.shape[1]
    hits = total = 0
    for s in orders:
        for _ in range(draws):
            x = np.zeros(n_signal, dtype=complex)
            sup = rng.choice(n_signal, size=s, replace=False)
            x[sup] = _complex_gaussian(rng, s) + 2.0
            blocks = extract_blocks(a @ x, design.scheme)
            hits += numerical_rank(blocks, rel_tol=1e-8) == s
            total += 1
    return hits, total


def test_criterion_01_block_rank_equals_sparsity_disjoint():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    design = build_nonoverlap_design(
        _complex_gaussian(rng, 11, 128), _complex_gaussian(rng, 11, 128)
    )
    hits, total = _rank_identity_fraction(design, rng)
    _gate(
        1,
        "reshaped measurement rank equals sparsity (disjoint blocks)",
        10.0,
        hits == total,
        time.perf_counter() - start,
        f"{hits}/{total}",
    )


def test_criterion_02_block_rank_equals_sparsity_overlapping():
    start = time.perf_counter()
    rng = np.random.default_rng(102)
    m, n_signal = 64, 128
    hits = total = 0
    for p in (1, 2, 4):
        n_rows = -(-m // p)
        vspec = design_low_coherence(
            n_rows, n_signal, optimal_radius(n_rows, n_signal)
        )
        design = build_overlap_design(
            vspec, _complex_gaussian(rng, p, n_signal), m, p
        )
        h, t = _rank_identity_fraction(design, rng)
        hits += h
        total += t
    _gate(
        2,
        "reshaped measurement rank equals sparsity (overlapping blocks)",
        30.0,
        hits == total,
        time.perf_counter() - start,
        f"{hits}/{total}",
    )


def _lambda_oracle(c1, c2, phi, n):
    k = np.arange(1, n + 1)
    v1 = (c1 * np.exp(1j * phi)) ** k
    v2 = (c2 + 0.0j) ** k
    num = abs(np.vdot(v2, v1)) ** 2
    return num / (np.linalg.norm(v1) ** 2 * np.linalg.norm(v2) ** 2)


def test_criterion_03_correlation_matches_inner_product_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(10_000):
        c1, c2 = 0.3 + 1.4 * rng.random(2)
        phi = 2.0 * np.pi * rng.random()
        n = int(rng.integers(2, 13))
        lam = pair_correlation_sq(EnvelopeParams(c1=c1, c2=c2, n=n), phi)
        worst = max(worst, abs(lam - _lambda_oracle(c1, c2, phi, n)))
    _gate(
        3,
        "closed-form column correlation matches explicit inner products",
        5.0,
        worst < 1e-9,
        time.perf_counter() - start,
        f"max err {worst:.2e}",
    )


_SANDWICH_COMBOS = [
    (1.15, 1.0 / 1.15, 5),
    (0.5, 0.5, 3),
    (0.5, 0.8, 4),
    (0.5, 1.2, 7),
    (0.6, 1.0, 5),
    (0.7, 0.7, 8),
    (0.7, 1.3, 3),
    (0.8, 0.9, 6),
    (0.8, 1.25, 4),
    (0.9, 0.9, 5),
    (0.9, 1.1, 9),
    (1.0, 1.0, 4),
    (1.0, 1.3, 6),
    (1.05, 0.6, 8),
    (1.1, 1.1, 3),
    (1.15, 1.15, 5),
    (1.2, 0.5, 10),
    (1.25, 0.8, 12),
    (1.3, 1.3, 4),
    (1.4, 0.9, 7),
]


def test_criterion_04_envelopes_sandwich_and_roots():
    start = time.perf_counter()
    assert len(_SANDWICH_COMBOS) == 20
    phis = np.linspace(1e-4, 2.0 * np.pi - 1e-4, 1000)
    sandwich_ok = True
    for c1, c2, n in _SANDWICH_COMBOS:
        params = EnvelopeParams(c1=c1, c2=c2, n=n)
        for phi in phis:
            lam = pair_correlation_sq(params, phi)
            kappa, eta = correlation_envelopes(params, phi)
            if not (
                kappa * (1.0 - 1e-9) - 1e-15 <= lam <= eta * (1.0 + 1e-9) + 1e-15
            ):
                sandwich_ok = False
    roots_ok = True
    for c1, n in ((1.15, 5), (0.8, 6), (0.5, 4), (1.3, 7)):
        params = EnvelopeParams(c1=c1, c2=1.0 / c1, n=n)
        for k in range(1, n):
            roots_ok &= (
                pair_correlation_sq(params, 2.0 * np.pi * k / n) < 1e-12
            )
    _gate(
        4,
        "correlation stays between its envelopes; reciprocal radii have "
        "grid roots",
        5.0,
        sandwich_ok and roots_ok,
        time.perf_counter() - start,
    )


def test_criterion_05_coherence_certificates():
    start = time.perf_counter()
    ok = True
    details = []
    for n, m in ((5, 8), (8, 32), (16, 64), (16, 128)):
        cert = coherence_bounds(n, m, optimal_radius(n, m))
        ok &= cert.lower <= cert.achieved <= cert.upper <= 1.0
        details.append(f"({n},{m}):{cert.achieved:.3f}")
    _gate(
        5,
        "two-ring designs carry valid coherence brackets",
        20.0,
        ok,
        time.perf_counter() - start,
        " ".join(details),
    )


def test_criterion_06_uniform_grid_designs_are_orthogonal():
    start = time.perf_counter()
    ok = True
    for n in (2, 4, 8, 16, 32, 64):
        for offset in (0.0, 0.37, 2.0, -1.2):
            mu = coherence(materialize(orthogonal_design(n, offset)))
            ok &= mu < 1e-12
    _gate(
        6,
        "uniform unit-circle generators give coherence-free designs",
        2.0,
        ok,
        time.perf_counter() - start,
    )


def test_criterion_07_blocked_noise_gram_is_white():
    start = time.perf_counter()
    ok = True
    details = []
    for ell, k, p in ((8, 8, 8), (8, 15, 1), (16, 9, 4)):
        scheme = BlockingScheme(m=ell + p * (k - 1), ell=ell, p=p, k=k)
        dev = noise_gram_check(scheme, 20_000, 107)
        ok &= dev < 0.05
        details.append(f"({ell},{k},{p}):{dev:.4f}")
    _gate(
        7,
        "blocked pure noise matches its whitened gram target",
        20.0,
        ok,
        time.perf_counter() - start,
        " ".join(details),
    )


def test_criterion_08_pure_noise_is_rarely_rejected():
    start = time.perf_counter()
    scheme = blocking_params(64, 0)
    cal = calibrate_thresholds(
        scheme.ell, scheme.k, 1.0, 0.005, 2000, 108, p=scheme.p
    )
    rng = np.random.default_rng(109)
    zeros = 0
    trials = 10_000
    for _ in range(trials):
        noise = _complex_gaussian(rng, 64)
        zeros += estimate_order(extract_blocks(noise, scheme), cal) == 0
    _gate(
        8,
        "calibrated order test keeps its false-alarm budget on pure noise",
        60.0,
        zeros >= 0.985 * trials,
        time.perf_counter() - start,
        f"{zeros}/{trials} zeros",
    )


def test_criterion_09_coherence_bound_guarantees_omp_recovery():
    start = time.perf_counter()
    rng = np.random.default_rng(110)
    a = build_plain_matrix("VanderAlg1", 64, 32, rng)
    mu = coherence(a)
    k_max = kmax_from_coherence(mu)
    successes = 0
    trials = 100
    for _ in range(trials):
        x = sample_signal(64, k_max, False, 32, rng)
        result = omp(a, a @ x.dense(), k_max)
        successes += support_success(result.estimate, x)
    _gate(
        9,
        "noiseless recovery succeeds up to the coherence sparsity bound",
        10.0,
        k_max >= 1 and successes == trials,
        time.perf_counter() - start,
        f"mu={mu:.3f} K={k_max} {successes}/{trials}",
    )


def test_criterion_10_overlap_reaches_accuracy_at_lower_snr():
    start = time.perf_counter()
    overlap = run_soe_sweep(ScenarioConfig(p=1))
    disjoint = run_soe_sweep(ScenarioConfig(p=0))
    k_true = 6

    def first_reach(table):
        for i, mean in enumerate(table.column("soe_mean")):
            if mean >= 0.9 * k_true:
                return i
        return None

    i_overlap = first_reach(overlap)
    i_disjoint = first_reach(disjoint)
    saturated = (
        abs(overlap.column("soe_mean")[-1] - k_true) <= 0.5
        and abs(disjoint.column("soe_mean")[-1] - k_true) <= 0.5
    )
    ok = (
        i_overlap is not None
        and i_disjoint is not None
        and i_overlap <= i_disjoint - 2
        and saturated
    )
    detail = f"reach idx {i_overlap} vs {i_disjoint}"
    _gate(
        10,
        "maximum-overlap blocking needs markedly less SNR than disjoint",
        300.0,
        ok,
        time.perf_counter() - start,
        detail,
    )


def test_criterion_11_designed_vandermonde_beats_grid_gaussian_beats_all():
    start = time.perf_counter()
    cfg = ScenarioConfig(
        m=64,
        matrix_kind="VanderUniform",
        structured_support=True,
        snr_grid_db=(-10.0, -5.0, 0.0),
    )
    table = run_vander_comparison(cfg)
    slack = 0.02
    ok = True
    for row in range(len(table.rows)):
        rnd = table.column("vand_rnd_supp")[row]
        reg = table.column("vand_reg_supp")[row]
        opt = table.column("vand_opt_supp")[row]
        gauss = table.column("rnd_supp")[row]
        ok &= opt >= reg - slack
        ok &= gauss >= max(rnd, reg, opt) - slack
    _gate(
        11,
        "two-ring design beats the regular grid; Gaussian beats all "
        "Vandermonde variants",
        300.0,
        ok,
        time.perf_counter() - start,
    )


def test_criterion_12_simulation_is_byte_identical_across_threads(
    tmp_path, monkeypatch, capsys
):
    start = time.perf_counter()
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        "N = 24\nm = 16\nK = 2\ntrials = 3\nmos_trials = 100\n"
        "snr_start_db = 0\nsnr_stop_db = 20\nsnr_step_db = 10\nseed = 3\n"
    )
    outputs = []
    for run, threads in enumerate(("1", "4", "1")):
        monkeypatch.setenv("SOESTIM_THREADS", threads)
        out_dir = tmp_path / f"out{run}"
        code = cli_main(
            [
                "simulate", "--figure", "2", "--config", str(cfg),
                "--output-dir", str(out_dir),
                "--cache-dir", str(tmp_path / f"cache{run}"),
            ]
        )
        assert code == 0
        outputs.append(
            {
                name: (out_dir / name).read_bytes()
                for name in (
                    "soe_16_1.csv", "soe_16_2.csv", "soe_16_4.csv", "soe_16_0.csv"
                )
            }
        )
    capsys.readouterr()
    ok = outputs[0] == outputs[1] == outputs[2]
    _gate(
        12,
        "repeated simulations are byte-identical with and without threads",
        60.0,
        ok,
        time.perf_counter() - start,
    )
