import math

import numpy as np
import pytest

from wienerchaos import chaos2, mc
from wienerchaos.chaos2 import DiagonalSecondChaos, MultivariateSecondChaos
from wienerchaos.wick import (
    cumulants_from_moment_sequence,
    isserlis_expectation,
)

SQ2 = 2 ** -0.5


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def test_variance_and_normalize():
    f = DiagonalSecondChaos([1.0, 2.0])
    assert f.variance == pytest.approx(10.0)
    g = DiagonalSecondChaos([1.0, 2.0], normalize=True)
    assert g.unit_variance


def test_rejects_zero_vector():
    with pytest.raises(ValueError):
        DiagonalSecondChaos([0.0, 0.0])


def test_variance_matches_oracle(unit_alphas_factory):
    rng = np.random.default_rng(1)
    for _ in range(5):
        f = unit_alphas_factory(rng)
        p = f.to_polynomial()
        assert isserlis_expectation(p * p) == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# newton sums, cumulants, elementary symmetric functions
# ---------------------------------------------------------------------------

def test_newton_cumulants_single_coefficient():
    tab = chaos2.newton_cumulants(DiagonalSecondChaos([SQ2]), 2)
    assert tab.newton[0] == pytest.approx(0.5)
    assert tab.newton[1] == pytest.approx(0.25)
    assert tab.cumulants[0] == pytest.approx(1.0)   # kappa_2
    assert tab.cumulants[1] == pytest.approx(12.0)  # kappa_4
    assert tab.elementary[1] == pytest.approx(0.0, abs=1e-15)  # S_2, m = 1


def test_newton_cumulants_two_coefficients():
    tab = chaos2.newton_cumulants(DiagonalSecondChaos([0.5, 0.5]), 2)
    assert tab.elementary[0] == pytest.approx(0.5)
    assert tab.elementary[1] == pytest.approx(1.0 / 16.0)
    n1, n2 = tab.newton
    assert tab.elementary[1] == pytest.approx((n1 ** 2 - n2) / 2.0)


def test_kappa2_is_variance(unit_alphas_factory):
    rng = np.random.default_rng(2)
    for _ in range(5):
        f = unit_alphas_factory(rng)
        tab = chaos2.newton_cumulants(f, 1)
        assert tab.cumulants[0] == pytest.approx(f.variance, rel=1e-12)


def test_cumulants_match_isserlis_oracle(unit_alphas_factory):
    rng = np.random.default_rng(3)
    for _ in range(8):
        f = unit_alphas_factory(rng)
        tab = chaos2.newton_cumulants(f, 3)
        p = f.to_polynomial()
        moments = [isserlis_expectation(p ** k) for k in range(1, 7)]
        ks = cumulants_from_moment_sequence(moments)
        for p_idx, kappa in [(1, ks[1]), (2, ks[3]), (3, ks[5])]:
            assert tab.cumulants[p_idx - 1] == pytest.approx(kappa, rel=1e-10)


def test_girard_partition_matches_recursion(unit_alphas_factory):
    rng = np.random.default_rng(4)
    for _ in range(6):
        f = unit_alphas_factory(rng)
        tab = chaos2.newton_cumulants(f, 6)
        for p in range(1, 7):
            explicit = chaos2.girard_partition_sum(tab.newton, p)
            assert tab.elementary[p - 1] == pytest.approx(
                explicit, rel=1e-10, abs=1e-14)


# ---------------------------------------------------------------------------
# S_p deviation inequality
# ---------------------------------------------------------------------------

def test_sp_deviation_pair():
    res = chaos2.check_sp_deviation(DiagonalSecondChaos([0.5, 0.5]), 2)
    assert res.lhs == pytest.approx(1.0 / 16.0)
    assert res.rhs == pytest.approx(0.25)  # kappa4 = 6
    assert res.holds


def test_sp_deviation_chi2_family():
    n = 8
    f = DiagonalSecondChaos(np.full(n, 1.0 / math.sqrt(2 * n)))
    res = chaos2.check_sp_deviation(f, 2)
    kappa4 = chaos2.newton_cumulants(f, 2).cumulants[1]
    assert kappa4 == pytest.approx(12.0 / n)
    assert res.rhs == pytest.approx(kappa4 / 24.0)
    assert res.holds


def test_sp_deviation_single():
    res = chaos2.check_sp_deviation(DiagonalSecondChaos([SQ2]), 2)
    assert res.lhs == pytest.approx(1.0 / 8.0)
    assert res.rhs == pytest.approx(0.5)
    assert res.holds


def test_sp_deviation_requires_unit_variance():
    with pytest.raises(chaos2.PreconditionError):
        chaos2.check_sp_deviation(DiagonalSecondChaos([1.0]), 2)


def test_sp_deviation_holds_up_to_p6(unit_alphas_factory):
    rng = np.random.default_rng(5)
    for _ in range(10):
        f = unit_alphas_factory(rng)
        for p in range(1, 7):
            assert chaos2.check_sp_deviation(f, p).holds


# ---------------------------------------------------------------------------
# Laplace transform of Gamma
# ---------------------------------------------------------------------------

def test_laplace_examples():
    assert chaos2.laplace_gamma(DiagonalSecondChaos([SQ2]), 0.0) == 1.0
    assert chaos2.laplace_gamma(DiagonalSecondChaos([SQ2]), 1.0) == \
        pytest.approx(5 ** -0.5)
    assert chaos2.laplace_gamma(DiagonalSecondChaos([0.5, 0.5]), 1.0) == \
        pytest.approx(1.0 / 3.0)


def test_laplace_domain():
    with pytest.raises(ValueError):
        chaos2.laplace_gamma(DiagonalSecondChaos([SQ2]), -0.1)


@pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
def test_laplace_matches_mc(lam):
    f = DiagonalSecondChaos([0.5, 0.5])
    closed, est = chaos2.laplace_vs_mc(f, lam, 200_000, mc.RngSpec(17))
    assert est.within(closed, 4.0)


# ---------------------------------------------------------------------------
# certificates and the small-ball bound
# ---------------------------------------------------------------------------

def test_thm1_thresholds():
    assert chaos2.thm1_certificate(0.0, 2).threshold == pytest.approx(1.0)
    cert = chaos2.thm1_certificate(1.0 / 16.0, 3)
    assert cert.threshold == pytest.approx(1.0 / 8.0)
    assert cert.certified and cert.q_sup == pytest.approx(1.5)
    cert1 = chaos2.thm1_certificate(12.0, 1)
    assert cert1.threshold == pytest.approx(6.0)
    assert not cert1.certified


def test_smallball_bound_values():
    assert chaos2.smallball_bound(2, 0.01) == pytest.approx(0.005)
    assert chaos2.smallball_bound(1, 1.0) == pytest.approx(SQ2)
    eps = np.geomspace(1e-4, 1.0, 10)
    vals = [chaos2.smallball_bound(3, e) for e in eps]
    assert np.all(np.diff(vals) > 0)


def test_smallball_empirical_never_beats_bound():
    # certified family: kappa4 = 12/16 < 1 = threshold at p = 2
    n = 16
    f = DiagonalSecondChaos(np.full(n, 1.0 / math.sqrt(2 * n)))
    assert chaos2.thm1_certificate(
        chaos2.newton_cumulants(f, 2).cumulants[1], 2).certified
    nsamp = 100_000
    g = f.sample_gamma(mc.RngSpec(23).generator(), nsamp)
    for eps in (0.1, 0.3, 0.6):
        phat = float((g < eps).mean())
        se = math.sqrt(phat * (1 - phat) / nsamp)
        assert phat <= chaos2.smallball_bound(2, eps) + 3 * se


# ---------------------------------------------------------------------------
# negative moments
# ---------------------------------------------------------------------------

def test_negative_moment_closed_form():
    # Gamma = 2 G^2: E (2G^2)^(-1/4) = Gamma(1/4) / sqrt(2 pi)
    from scipy.special import gamma as gfun
    val = chaos2.negative_moment(DiagonalSecondChaos([SQ2]), 0.25)
    assert val == pytest.approx(
        float(gfun(0.25)) / math.sqrt(2.0 * math.pi), abs=1e-8)


def test_negative_moment_matches_mc():
    f = DiagonalSecondChaos([0.5, 0.5])
    val = chaos2.negative_moment(f, 0.5)
    # Gamma = chi^2_2, E Gamma^(-1/2) = sqrt(pi/2)
    assert val == pytest.approx(math.sqrt(math.pi / 2.0), abs=1e-7)
    est = mc.estimate(lambda rng, cnt: f.sample_gamma(rng, cnt) ** -0.5,
                      400_000, mc.RngSpec(29))
    assert est.within(val, 3.0)


def test_negative_moment_divergence():
    with pytest.raises(chaos2.DivergenceError):
        chaos2.negative_moment(DiagonalSecondChaos([SQ2]), 0.5)


# ---------------------------------------------------------------------------
# characteristic function and density inversion
# ---------------------------------------------------------------------------

def test_char_function_at_zero():
    f = DiagonalSecondChaos([SQ2])
    assert chaos2.char_function(f, 0.0) == 1.0 + 0.0j


def test_char_function_modulus():
    f = DiagonalSecondChaos([SQ2])
    assert abs(chaos2.char_function(f, 1.0)) == pytest.approx(3 ** -0.25)


def test_char_function_bounded_and_modulus_identity(unit_alphas_factory):
    rng = np.random.default_rng(6)
    for _ in range(5):
        f = unit_alphas_factory(rng)
        xis = rng.standard_normal(20) * 5.0
        phi = chaos2.char_function(f, xis)
        assert np.all(np.abs(phi) <= 1.0 + 1e-15)
        prod = np.prod(
            1.0 + 4.0 * np.outer(xis ** 2, f.alphas ** 2), axis=1)
        assert np.allclose(np.abs(phi) ** 2 * np.sqrt(prod), 1.0,
                           rtol=1e-10, atol=0)


def test_density_mass_and_gaussian_limit():
    n = 64
    f = DiagonalSecondChaos(np.full(n, 1.0 / math.sqrt(2 * n)))
    xs, dens = chaos2.density_by_inversion(f, -6.0, 6.0, 0.02)
    assert float(np.trapezoid(dens, xs)) == pytest.approx(1.0, abs=1e-3)
    big = DiagonalSecondChaos(np.full(256, 1.0 / math.sqrt(512)))
    xs, dens = chaos2.density_by_inversion(big, -1.0, 1.0, 0.01)
    f0 = dens[np.argmin(np.abs(xs))]
    assert f0 == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=0.01)


def test_density_small_family_is_skewed():
    n = 4
    f = DiagonalSecondChaos(np.full(n, 1.0 / math.sqrt(2 * n)))
    # positive third cumulant: kappa_3 = 8 sum alpha^3 > 0
    assert 8.0 * np.sum(f.alphas ** 3) > 0
    xs, dens = chaos2.density_by_inversion(f, -3.0, 3.0, 0.01, tail_eps=1e-6)
    assert xs[np.argmax(dens)] < 0.0
    # histogram cross-check of the mode location
    samples = f.sample_f(mc.RngSpec(31).generator(), 200_000)
    hist, edges = np.histogram(samples, bins=80, range=(-3, 3))
    centers = 0.5 * (edges[:-1] + edges[1:])
    assert centers[np.argmax(hist)] < 0.0


def test_density_requires_three_coefficients():
    with pytest.raises(chaos2.NonIntegrableError):
        chaos2.density_by_inversion(DiagonalSecondChaos([0.5, 0.5]))


# ---------------------------------------------------------------------------
# multivariate second chaos
# ---------------------------------------------------------------------------

def worked_pair():
    a1 = np.diag([0.5, -0.5])
    a2 = np.array([[0.0, 0.5], [0.5, 0.0]])
    return MultivariateSecondChaos([a1, a2])


def test_multivariate_identity_cov():
    m = worked_pair()
    assert m.has_identity_cov()


def test_multivariate_rejects_asymmetric():
    with pytest.raises(ValueError):
        MultivariateSecondChaos([np.array([[0.0, 1.0], [0.0, 0.0]])])


def test_cross_gamma_worked_pair():
    stats = chaos2.cross_gamma_stats(worked_pair())
    # A1 A2 antisymmetric: the cross carre du champ vanishes identically
    assert stats.cross_l2[0, 1] == pytest.approx(0.0, abs=1e-14)
    assert stats.var_diag[0] == pytest.approx(4.0)  # Var(X1^2 + X2^2)
    assert stats.holds


def test_cross_gamma_degenerate_d1():
    m = MultivariateSecondChaos([np.array([[SQ2]])])
    stats = chaos2.cross_gamma_stats(m)
    assert stats.bound_rhs == pytest.approx(stats.var_diag[0])
    assert stats.worst_lhs == pytest.approx(stats.var_diag[0])
    assert stats.holds


def test_cov_matches_isserlis(unit_alphas_factory):
    rng = np.random.default_rng(8)
    a1 = rng.standard_normal((3, 3))
    a1 = 0.5 * (a1 + a1.T)
    a2 = rng.standard_normal((3, 3))
    a2 = 0.5 * (a2 + a2.T)
    m = MultivariateSecondChaos([a1, a2])
    cov = m.covariance()
    polys = [chaos2.quadratic_form_polynomial(a) - float(np.trace(a))
             for a in (a1, a2)]
    for i in range(2):
        for j in range(2):
            assert cov[i, j] == pytest.approx(
                isserlis_expectation(polys[i] * polys[j]), rel=1e-10)


def test_sphere_kappa4_worked_pair():
    m = worked_pair()
    res = chaos2.sphere_kappa4_max(m, resolution=32)
    assert res.value == pytest.approx(6.0, abs=1e-12)
    for t in chaos2.sphere_grid(2, 16):
        assert chaos2.kappa4_of_direction(m, t) == pytest.approx(6.0, abs=1e-12)


def test_sphere_kappa4_d1_consistency():
    m = MultivariateSecondChaos([np.array([[SQ2]])])
    res = chaos2.sphere_kappa4_max(m)
    assert res.value == pytest.approx(12.0)
    tab = chaos2.newton_cumulants(DiagonalSecondChaos([SQ2]), 2)
    assert res.value == pytest.approx(tab.cumulants[1])


def test_sphere_kappa4_axis_max():
    a1 = np.diag([0.5, -0.5])
    m = MultivariateSecondChaos([a1, np.zeros((2, 2))])
    res = chaos2.sphere_kappa4_max(m, resolution=64)
    assert res.value == pytest.approx(6.0, abs=1e-9)
    assert abs(res.direction[0]) == pytest.approx(1.0, abs=1e-6)
