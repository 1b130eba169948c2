"""Tests for column-correlation analysis and the two-ring designs.

The correlation closed form is checked against explicit inner products
of materialized columns, the envelopes against dense grids, and the
design constructions against their geometric definitions.
"""

import numpy as np
import pytest

from soestim import (
    CoherenceCertificate,
    EnvelopeParams,
    VandermondeSpec,
    coherence,
    coherence_bounds,
    correlation_envelopes,
    design_low_coherence,
    geometric_sum,
    materialize,
    optimal_radius,
    orthogonal_design,
    pair_correlation_sq,
)


def _correlation_oracle(c1, c2, n, phi):
    # explicit normalized squared inner product of two power columns
    k = np.arange(1, n + 1)
    v1 = (c1 * np.exp(1j * phi)) ** k
    v2 = (c2 + 0j) ** k
    num = abs(np.vdot(v2, v1)) ** 2
    return num / ((np.linalg.norm(v1) * np.linalg.norm(v2)) ** 2)


class TestGeometricSum:
    def test_known_values(self):
        assert geometric_sum(1.0, 7) == 7.0
        assert geometric_sum(2.0, 3) == 14.0
        assert geometric_sum(0.5, 2) == 0.75

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            q = rng.uniform(0.2, 2.0) * np.exp(2j * np.pi * rng.random())
            n = int(rng.integers(1, 20))
            direct = sum(q**k for k in range(1, n + 1))
            assert abs(geometric_sum(q, n) - direct) <= 1e-12 * max(
                1.0, abs(direct)
            )

    def test_continuous_near_one(self):
        # closed form and direct summation must agree across the switch
        for q in (1.0 + 2e-6, 1.0 + 5e-7, 1.0 - 5e-7 + 1e-7j):
            direct = sum(q**k for k in range(1, 13))
            assert abs(geometric_sum(q, 12) - direct) < 1e-9

    def test_n_domain(self):
        with pytest.raises(ValueError):
            geometric_sum(0.5, 0)


class TestVandermondeSpec:
    def test_materialize_powers_start_at_one(self):
        spec = VandermondeSpec(n=3, generators=[2j])
        assert np.array_equal(
            materialize(spec)[:, 0], np.array([2j, -4.0, -8j])
        )

    def test_m_property(self):
        assert VandermondeSpec(n=2, generators=[1.0, 2.0, 3.0]).m == 3

    def test_validation(self):
        with pytest.raises(ValueError):
            VandermondeSpec(n=0, generators=[1.0])
        with pytest.raises(ValueError):
            VandermondeSpec(n=2, generators=[])
        with pytest.raises(ValueError):
            VandermondeSpec(n=2, generators=[1.0, 0.0])
        with pytest.raises(ValueError):
            VandermondeSpec(n=2, generators=[np.inf])


class TestPairCorrelation:
    def test_matches_inner_product_oracle(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(2000):
            n = int(rng.integers(2, 13))
            c1, c2 = rng.uniform(0.5, 2.0, 2)
            phi = 2.0 * np.pi * rng.random()
            got = pair_correlation_sq(EnvelopeParams(c1=c1, c2=c2, n=n), phi)
            worst = max(worst, abs(got - _correlation_oracle(c1, c2, n, phi)))
        assert worst < 1e-9

    def test_radius_swap_is_exact(self):
        val_a = pair_correlation_sq(EnvelopeParams(c1=0.7, c2=1.3, n=6), 0.9)
        val_b = pair_correlation_sq(EnvelopeParams(c1=1.3, c2=0.7, n=6), 0.9)
        assert val_a == val_b

    def test_invariant_under_inverting_both_radii(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            c1, c2 = rng.uniform(0.4, 2.5, 2)
            n = int(rng.integers(2, 10))
            phi = 2.0 * np.pi * rng.random()
            a = pair_correlation_sq(EnvelopeParams(c1=c1, c2=c2, n=n), phi)
            b = pair_correlation_sq(
                EnvelopeParams(c1=1.0 / c1, c2=1.0 / c2, n=n), phi
            )
            assert abs(a - b) < 1e-12

    def test_even_in_phi(self):
        p = EnvelopeParams(c1=0.8, c2=1.1, n=5)
        for phi in (0.1, 1.3, 3.0):
            assert abs(
                pair_correlation_sq(p, phi) - pair_correlation_sq(p, -phi)
            ) < 1e-12

    def test_zero_separation_same_radius_is_one(self):
        assert pair_correlation_sq(EnvelopeParams(c1=0.9, c2=0.9, n=7), 0.0) == 1.0

    def test_params_validation(self):
        with pytest.raises(ValueError):
            EnvelopeParams(c1=0.0, c2=1.0, n=5)
        with pytest.raises(ValueError):
            EnvelopeParams(c1=1.0, c2=-2.0, n=5)
        with pytest.raises(ValueError):
            EnvelopeParams(c1=1.0, c2=1.0, n=1)


SANDWICH_COMBOS = [
    (0.9, 0.9, 5),
    (0.8, 1.1, 7),
    (1.15, 1.0 / 1.15, 5),
    (0.5, 0.5, 3),
    (1.0, 1.0, 4),
    (0.97, 1.02, 12),
]


class TestEnvelopes:
    @pytest.mark.parametrize("c1,c2,n", SANDWICH_COMBOS)
    def test_sandwich_on_grid(self, c1, c2, n):
        params = EnvelopeParams(c1=c1, c2=c2, n=n)
        for phi in np.linspace(1e-6, 2.0 * np.pi - 1e-6, 500):
            lam = pair_correlation_sq(params, phi)
            kappa, eta = correlation_envelopes(params, phi)
            assert kappa - 1e-12 <= lam <= eta + 1e-12

    def test_touch_points_lower(self):
        params = EnvelopeParams(c1=0.8, c2=0.9, n=6)
        for k in range(6):
            phi = 2.0 * np.pi * k / 6
            lam = pair_correlation_sq(params, phi)
            kappa, _ = correlation_envelopes(params, phi)
            assert abs(lam - kappa) < 1e-9 * max(1.0, kappa)

    def test_touch_points_upper(self):
        params = EnvelopeParams(c1=0.8, c2=0.9, n=6)
        for k in range(6):
            phi = np.pi / 6 + 2.0 * np.pi * k / 6
            lam = pair_correlation_sq(params, phi)
            _, eta = correlation_envelopes(params, phi)
            assert abs(lam - eta) < 1e-9 * max(1.0, eta)

    def test_reciprocal_radii_lower_envelope_vanishes(self):
        params = EnvelopeParams(c1=1.3, c2=1.0 / 1.3, n=5)
        for phi in (0.2, 1.0, 4.0):
            kappa, eta = correlation_envelopes(params, phi)
            assert kappa == 0.0
            assert eta > 0.0

    def test_reciprocal_radii_correlation_roots(self):
        for c, n in [(1.15, 5), (0.7, 8), (0.5, 4)]:
            params = EnvelopeParams(c1=c, c2=1.0 / c, n=n)
            for k in range(1, n):
                assert pair_correlation_sq(params, 2.0 * np.pi * k / n) < 1e-12

    def test_upper_envelope_pole_raises(self):
        params = EnvelopeParams(c1=2.0, c2=0.5, n=5)
        with pytest.raises(ValueError):
            correlation_envelopes(params, 0.0)
        with pytest.raises(ValueError):
            correlation_envelopes(params, 4.0 * np.pi)

    def test_envelope_gap_closes_for_large_radii(self):
        # relative gap is 4*rho^n / (1 + rho^n)^2 with rho = c^2 here
        gaps = []
        for c in (3.0, 10.0):
            params = EnvelopeParams(c1=c, c2=c, n=4)
            kappa, eta = correlation_envelopes(params, np.pi / 7)
            gap = (eta - kappa) / eta
            assert gap <= 4.0 * c**-8 * (1.0 + 1e-9)
            gaps.append(gap)
        assert gaps[0] > gaps[1] > 0.0


class TestDesignLowCoherence:
    def test_even_m_layout(self):
        spec = design_low_coherence(5, 8, 0.9)
        gens = spec.generators
        assert spec.n == 5 and gens.size == 8
        assert np.allclose(np.abs(gens[:4]), 0.9, atol=1e-12)
        assert np.allclose(np.abs(gens[4:]), 1.0 / 0.9, atol=1e-12)
        inner = np.angle(gens[:4]) % (2.0 * np.pi)
        outer = np.angle(gens[4:]) % (2.0 * np.pi)
        assert np.allclose(inner, [0.0, np.pi / 2, np.pi, 3 * np.pi / 2], atol=1e-12)
        assert np.allclose(outer, inner + np.pi / 4, atol=1e-12)

    def test_odd_m_truncates_slot_layout(self):
        spec = design_low_coherence(4, 5, 0.8)
        gens = spec.generators
        assert gens.size == 5
        assert np.allclose(np.abs(gens[:3]), 0.8, atol=1e-12)
        assert np.allclose(np.abs(gens[3:]), 1.25, atol=1e-12)
        angles = np.angle(gens) % (2.0 * np.pi)
        want = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3, np.pi / 3, np.pi])
        assert np.allclose(angles, want, atol=1e-12)

    def test_unit_radius_collapses_to_regular_grid(self):
        spec = design_low_coherence(3, 6, 1.0)
        assert np.allclose(np.abs(spec.generators), 1.0, atol=1e-15)
        angles = np.sort(np.angle(spec.generators) % (2.0 * np.pi))
        assert np.allclose(angles, 2.0 * np.pi * np.arange(6) / 6, atol=1e-12)

    def test_domain(self):
        for bad in (0.0, -0.3, 1.5):
            with pytest.raises(ValueError):
                design_low_coherence(4, 8, bad)
        with pytest.raises(ValueError):
            design_low_coherence(1, 8, 0.5)
        with pytest.raises(ValueError):
            design_low_coherence(4, 1, 0.5)


class TestCoherenceBounds:
    def test_pinned_case(self):
        cert = coherence_bounds(5, 8, 0.9)
        assert abs(cert.lower - 0.1476421369113564) < 1e-12
        assert abs(cert.achieved - 0.46206584734900275) < 1e-12
        assert abs(cert.upper - 0.5001364691920562) < 1e-12

    def test_bracket_holds_across_shapes(self):
        # every (n, m, c) cell must certify, odd and even m alike
        for n in (2, 3, 4, 5, 8):
            for m in range(n + 1, n + 13):
                for c in (0.35, 0.8, 1.0):
                    cert = coherence_bounds(n, m, c)
                    assert cert.lower <= cert.achieved <= cert.upper + 1e-12

    def test_upper_never_exceeds_one(self):
        cert = coherence_bounds(2, 3, 0.99)
        assert cert.upper <= 1.0

    def test_m_must_exceed_n(self):
        with pytest.raises(ValueError):
            coherence_bounds(5, 5, 0.9)

    def test_certificate_rejects_inconsistent_values(self):
        with pytest.raises(ValueError):
            CoherenceCertificate(
                n=4, m=8, c=0.9, lower=0.5, achieved=0.4, upper=0.6
            )
        with pytest.raises(ValueError):
            CoherenceCertificate(
                n=4, m=8, c=0.9, lower=0.1, achieved=0.7, upper=0.3
            )


class TestOptimalRadius:
    def test_pinned_value(self):
        assert optimal_radius(5, 8) == 0.7727874797459587

    def test_deterministic(self):
        assert optimal_radius(6, 15) == optimal_radius(6, 15)

    def test_never_worse_than_grid(self):
        n, m = 4, 10
        best = optimal_radius(n, m)
        achieved = coherence(materialize(design_low_coherence(n, m, best)))
        for c in np.linspace(1.0 / 64, 1.0, 64):
            other = coherence(materialize(design_low_coherence(n, m, float(c))))
            assert achieved <= other + 1e-15

    def test_domain(self):
        with pytest.raises(ValueError):
            optimal_radius(8, 8)


class TestOrthogonalDesign:
    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    @pytest.mark.parametrize("offset", [0.0, 0.3, 2.2])
    def test_exactly_orthogonal_columns(self, n, offset):
        spec = orthogonal_design(n, offset)
        assert np.allclose(np.abs(spec.generators), 1.0, atol=1e-15)
        assert coherence(materialize(spec)) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            orthogonal_design(1)
