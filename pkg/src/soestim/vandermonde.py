"""Vandermonde design tools: column-correlation analysis and the
two-ring low-coherence generator construction with certified bounds.

A Vandermonde matrix here is determined by its generator list z_1..z_m
and a row count n; row r holds the r-th powers of the generators, with
r running from 1 to n. The squared normalized correlation between the
columns of two generators c1*e^{i*phi_1} and c2*e^{i*phi_2} depends
only on (c1, c2, phi_2 - phi_1), which is what makes an analytic
treatment possible:

    corr_sq(c1, c2, phi) = |G(c1*c2*e^{i*phi})|^2 / (G(c1^2) * G(c2^2))

with G the length-n geometric sum. That quantity oscillates in phi
between two smooth envelopes (kappa below, eta above) that touch it on
the regular grids phi = k*2*pi/n and phi = pi/n + k*2*pi/n. The
envelopes drive both the two-ring design and its coherence certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import coherence

RADIUS_UNIT_TOL = 1e-12
_GEO_DIRECT_TOL = 1e-6


def geometric_sum(q: complex, n: int) -> complex:
    """Sum of q^k for k = 1..n.

    Uses the closed form (q - q^(n+1)) / (1 - q) away from q = 1 and
    direct summation near it, where the closed form cancels
    catastrophically.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    q = complex(q)
    if abs(q - 1.0) < _GEO_DIRECT_TOL:
        total = 0j
        power = 1.0 + 0j
        for _ in range(n):
            power *= q
            total += power
        return total
    return (q - q ** (n + 1)) / (1.0 - q)


@dataclass
class VandermondeSpec:
    """Generator description of a Vandermonde matrix with powers 1..n."""

    n: int
    generators: np.ndarray

    def __post_init__(self):
        self.n = int(self.n)
        if self.n < 1:
            raise ValueError(f"row count must be >= 1, got {self.n}")
        gens = np.asarray(self.generators, dtype=np.complex128).reshape(-1)
        if gens.size == 0:
            raise ValueError("generator list is empty")
        if not np.all(np.isfinite(gens.view(np.float64))):
            raise ValueError("generators must be finite")
        if np.any(gens == 0):
            raise ValueError("generators must be nonzero")
        self.generators = gens

    @property
    def m(self) -> int:
        return self.generators.size


def materialize(spec: VandermondeSpec) -> np.ndarray:
    """Evaluate the n x m matrix with entry (r, c) = z_c^r, r = 1..n."""
    powers = np.arange(1, spec.n + 1)[:, None]
    return spec.generators[None, :] ** powers


@dataclass
class EnvelopeParams:
    """Radii pair and row count for correlation/envelope evaluation."""

    c1: float
    c2: float
    n: int

    def __post_init__(self):
        self.c1 = float(self.c1)
        self.c2 = float(self.c2)
        self.n = int(self.n)
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("radii must be positive")
        if self.n < 2:
            raise ValueError(f"row count must be >= 2, got {self.n}")


def _reduce_angle(phi: float) -> float:
    phi = math.fmod(float(phi), 2.0 * math.pi)
    if phi < 0.0:
        phi += 2.0 * math.pi
    return phi


def _inv_power_sum(c: float, n: int) -> float:
    # 1 / sum_{j=0..n-1} c^(2j); evaluates to 1/n at c = 1.
    return 1.0 / (1.0 + geometric_sum(c * c, n - 1).real)


def pair_correlation_sq(params: EnvelopeParams, phi: float) -> float:
    """Squared normalized correlation of two Vandermonde columns.

    The columns have generators at radii c1 and c2 with angular
    separation phi. Removable singularities (any radius equal to 1, or
    c1*c2 = 1 with phi = 0) are absorbed by the geometric-sum kernel,
    which is exact there.
    """
    phi = _reduce_angle(phi)
    q = params.c1 * params.c2 * complex(math.cos(phi), math.sin(phi))
    num = abs(geometric_sum(q, params.n)) ** 2
    den = (
        geometric_sum(params.c1 * params.c1, params.n).real
        * geometric_sum(params.c2 * params.c2, params.n).real
    )
    return min(num / den, 1.0)


def correlation_envelopes(params: EnvelopeParams, phi: float) -> tuple[float, float]:
    """Lower and upper envelopes (kappa, eta) of pair_correlation_sq.

    kappa vanishes identically when c1*c2 = 1. eta diverges when
    c1*c2 = 1 and phi is a multiple of 2*pi; that combination raises
    ValueError. Both envelopes are even in phi and invariant under
    inverting both radii.
    """
    phi = _reduce_angle(phi)
    c1, c2, n = params.c1, params.c2, params.n
    rho = c1 * c2
    g = _inv_power_sum(c1, n) * _inv_power_sum(c2, n)
    sin_half_sq = math.sin(0.5 * phi) ** 2
    reciprocal = abs(rho - 1.0) < RADIUS_UNIT_TOL
    if reciprocal and sin_half_sq == 0.0:
        raise ValueError(
            "upper envelope is unbounded at phi = 0 for reciprocal radii"
        )
    n2 = (1.0 - rho) ** 2 + 4.0 * rho * sin_half_sq
    rho_n = rho**n
    kappa = 0.0 if reciprocal else (1.0 - rho_n) ** 2 * g / n2
    eta = (1.0 + rho_n) ** 2 * g / n2
    return kappa, eta


def design_low_coherence(n: int, m: int, c: float) -> VandermondeSpec:
    """Two-ring generator layout at radii c and 1/c.

    Rounds m up to an even slot count m_hat, interleaves a ring of
    m_hat/2 generators at radius c (angles 4*pi*(k-1)/m_hat) with a ring
    at radius 1/c offset by half the angular step, and keeps the first
    m generators. c = 1 collapses both rings onto the unit circle,
    where the union of angles is the regular grid.
    """
    n = int(n)
    m = int(m)
    c = float(c)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if not (0.0 < c <= 1.0):
        raise ValueError(f"c must lie in (0, 1], got {c}")
    m_hat = 2 * ((m + 1) // 2)
    half = m_hat // 2
    inner_angles = 4.0 * np.pi * np.arange(half) / m_hat
    outer_angles = inner_angles + 2.0 * np.pi / m_hat
    gens = np.concatenate(
        [
            c * np.exp(1j * inner_angles),
            (1.0 / c) * np.exp(1j * outer_angles),
        ]
    )
    return VandermondeSpec(n=n, generators=gens[:m])


@dataclass
class CoherenceCertificate:
    """Analytic bracket around the achieved coherence of a design."""

    n: int
    m: int
    c: float
    lower: float
    achieved: float
    upper: float
    slack: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        for name in ("lower", "achieved", "upper"):
            v = getattr(self, name)
            if not (-1e-15 <= v <= 1.0 + 1e-15):
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not (self.lower <= self.achieved <= self.upper + self.slack):
            raise ValueError(
                f"certificate violated: lower={self.lower} "
                f"achieved={self.achieved} upper={self.upper}"
            )


def coherence_bounds(n: int, m: int, c: float) -> CoherenceCertificate:
    """Certified coherence bracket for the two-ring design.

    The lower bound comes from the tightest same-ring and cross-ring
    angular separations; the upper bound switches between envelope and
    exact-correlation terms depending on how m compares with 2n and 4n.
    The upper bound is clamped to 1, where it is vacuous anyway.
    """
    n = int(n)
    m = int(m)
    c = float(c)
    if m <= n:
        raise ValueError(f"need m > n, got n={n}, m={m}")
    if not (0.0 < c <= 1.0):
        raise ValueError(f"c must lie in (0, 1], got {c}")
    same = EnvelopeParams(c1=c, c2=c, n=n)
    cross = EnvelopeParams(c1=1.0 / c, c2=c, n=n)
    # Angular separations are multiples of 2*pi/m_hat, the slot count of
    # the two-ring layout; for odd m the built design is a subset of the
    # m_hat-generator one, so its bounds apply. Branch selection below
    # stays on the requested m (for odd m that can only widen the upper
    # bound, never shrink it).
    m_hat = 2 * ((m + 1) // 2)
    phi_same = 4.0 * np.pi / m_hat
    phi_cross = 2.0 * np.pi / m_hat

    kappa_same, eta_same = correlation_envelopes(same, phi_same)
    kappa_cross, _ = correlation_envelopes(cross, phi_cross)
    lower = max(math.sqrt(kappa_same), math.sqrt(kappa_cross))

    if m < 2 * n:
        _, eta_cross = correlation_envelopes(cross, phi_cross)
        u = max(eta_same, eta_cross)
    elif m <= 4 * n:
        u = max(eta_same, pair_correlation_sq(cross, phi_cross))
    else:
        u = max(
            pair_correlation_sq(same, phi_same),
            pair_correlation_sq(cross, phi_cross),
        )
    upper = min(1.0, math.sqrt(u))

    achieved = coherence(materialize(design_low_coherence(n, m, c)))
    # Both brackets can be attained exactly (the worst pair IS the one
    # the closed form evaluates), so the measured scan may land a few
    # ulps outside; snap it back so the fields order as the reals do.
    tol = 1e-12
    if upper < achieved <= upper * (1.0 + tol):
        achieved = upper
    elif lower * (1.0 - tol) <= achieved < lower:
        achieved = lower
    return CoherenceCertificate(
        n=n, m=m, c=c, lower=lower, achieved=achieved, upper=upper
    )


def _achieved(n: int, m: int, c: float) -> float:
    return coherence(materialize(design_low_coherence(n, m, c)))


def optimal_radius(n: int, m: int) -> float:
    """Inner-ring radius minimizing the achieved coherence.

    Scans a fixed 64-point grid on (0, 1], then refines the best
    bracket by golden-section search down to a width of 1e-6. The
    result is the best candidate over every evaluation, so it is never
    worse than any grid point. Deterministic.
    """
    n = int(n)
    m = int(m)
    if m <= n:
        raise ValueError(f"need m > n, got n={n}, m={m}")
    grid = np.linspace(1.0 / 64, 1.0, 64)
    values = [_achieved(n, m, float(c)) for c in grid]
    best_i = int(np.argmin(values))
    best_c, best_v = float(grid[best_i]), values[best_i]

    lo = float(grid[max(best_i - 1, 0)])
    hi = float(grid[min(best_i + 1, len(grid) - 1)])
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = _achieved(n, m, x1), _achieved(n, m, x2)
    while b - a > 1e-6:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = _achieved(n, m, x1)
            c_new, v_new = x1, f1
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = _achieved(n, m, x2)
            c_new, v_new = x2, f2
        if v_new < best_v:
            best_c, best_v = c_new, v_new
    return best_c


def orthogonal_design(n: int, phase_offset: float = 0.0) -> VandermondeSpec:
    """n unit-circle generators at uniform angular spacing 2*pi/n.

    The materialized columns are exactly orthogonal for any common
    phase offset.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    offset = _reduce_angle(phase_offset)
    angles = offset + 2.0 * np.pi * np.arange(n) / n
    return VandermondeSpec(n=n, generators=np.exp(1j * angles))
