"""Special-function layer checked against scipy.special references."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import special

from sphereqv.specfun import (
    bessel_j,
    harmonic_meridian_stack,
    harmonic_meridian_table,
    hilb_approx_p,
    legendre_p,
    legendre_p_all,
    legendre_p_deriv,
    real_harmonic_meridian,
)

RNG = np.random.default_rng(7121)


# ======================================================================
# Legendre polynomials
# ======================================================================

@pytest.mark.parametrize("ell", [0, 1, 2, 7, 40, 150])
def test_legendre_p_matches_reference(ell):
    x = np.concatenate([RNG.uniform(-1, 1, 200), [-1.0, 0.0, 1.0]])
    assert_allclose(legendre_p(ell, x), special.eval_legendre(ell, x),
                    rtol=0, atol=5e-13)


def test_legendre_p_scalar_and_array_agree():
    got = legendre_p(5, 0.3)
    assert isinstance(got, float)
    assert got == legendre_p(5, np.array([0.3]))[0]


def test_legendre_p_all_matches_single_degree():
    x = RNG.uniform(-1, 1, 17)
    table = legendre_p_all(12, x)
    assert table.shape == (13, 17)
    for ell in range(13):
        assert_array_equal(table[ell], legendre_p(ell, x))
    # scalar input collapses the trailing axis
    assert legendre_p_all(4, 0.5).shape == (5,)


@pytest.mark.parametrize("ell", [1, 3, 10, 33])
def test_legendre_deriv_interior_and_endpoints(ell):
    x = RNG.uniform(-0.999, 0.999, 50)
    h = 1e-6
    fd = (legendre_p(ell, x + h) - legendre_p(ell, x - h)) / (2 * h)
    assert_allclose(legendre_p_deriv(ell, x), fd, rtol=0, atol=5e-5)
    assert legendre_p_deriv(ell, 1.0) == ell * (ell + 1) / 2.0
    assert legendre_p_deriv(ell, -1.0) == (-1) ** (ell + 1) * ell * (ell + 1) / 2.0


def test_legendre_deriv_degree_zero():
    assert legendre_p_deriv(0, 0.4) == 0.0


def test_legendre_domain_errors():
    with pytest.raises(ValueError):
        legendre_p(3, 1.5)
    with pytest.raises(ValueError):
        legendre_p(-1, 0.5)
    with pytest.raises(ValueError):
        legendre_p(2.5, 0.5)
    with pytest.raises(ValueError):
        legendre_p_deriv(3, [-1.0001])


# ======================================================================
# Normalized meridian harmonics
# ======================================================================

def _reference_lambda(ell, m, theta):
    # N_lm P_l^m(cos θ) with scipy's lpmv (Condon-Shortley phase included);
    # log-space factorial ratio keeps l = 150 finite.
    logn = 0.5 * (np.log((2 * ell + 1) / (4 * np.pi))
                  + special.gammaln(ell - m + 1) - special.gammaln(ell + m + 1))
    return np.exp(logn) * special.lpmv(m, ell, np.cos(theta))


@pytest.mark.parametrize("ell", [0, 1, 3, 8, 25])
def test_harmonic_table_matches_reference(ell):
    theta = RNG.uniform(0.05, np.pi - 0.05, 40)
    table = harmonic_meridian_table(ell, theta)
    assert table.shape == (ell + 1, 40)
    for m in range(ell + 1):
        assert_allclose(table[m], _reference_lambda(ell, m, theta),
                        rtol=0, atol=1e-13)


def test_harmonic_table_high_degree_is_finite():
    theta = np.linspace(1e-3, np.pi - 1e-3, 64)
    table = harmonic_meridian_table(300, theta)
    assert np.isfinite(table).all()
    # spot-check the zonal row where the reference stays well conditioned
    assert_allclose(table[0], _reference_lambda(300, 0, theta), rtol=0, atol=1e-11)


def test_single_harmonic_matches_table():
    theta = RNG.uniform(0.1, 3.0, 9)
    table = harmonic_meridian_table(6, theta)
    for m in (0, 2, 6):
        assert_array_equal(real_harmonic_meridian(6, m, theta), table[m])
    assert isinstance(real_harmonic_meridian(6, 1, 0.7), float)
    with pytest.raises(ValueError):
        real_harmonic_meridian(6, 7, 0.7)
    with pytest.raises(ValueError):
        real_harmonic_meridian(6, -1, 0.7)


@pytest.mark.parametrize("ell", [1, 4, 11, 60])
def test_harmonic_addition_theorem(ell):
    # along one meridian the two-point sum telescopes to the Legendre kernel
    t1 = RNG.uniform(0.1, np.pi - 0.1, 25)
    t2 = RNG.uniform(0.1, np.pi - 0.1, 25)
    a, b = harmonic_meridian_table(ell, t1), harmonic_meridian_table(ell, t2)
    lhs = a[0] * b[0] + 2.0 * np.einsum("mt,mt->t", a[1:], b[1:])
    rhs = (2 * ell + 1) / (4 * np.pi) * legendre_p(ell, np.cos(t1 - t2))
    # kernel magnitude grows like (2l+1)/4π, so scale the floor with it
    assert_allclose(lhs, rhs, rtol=0, atol=(2 * ell + 1) * 2e-14)


def test_harmonic_stack_packs_per_degree_tables():
    theta = np.linspace(0.2, 1.4, 7)
    stack = harmonic_meridian_stack(3, 9, theta)
    assert stack.shape == (sum(l + 1 for l in range(3, 9)), 7)
    row = 0
    for ell in range(3, 9):
        assert_array_equal(stack[row:row + ell + 1],
                           harmonic_meridian_table(ell, theta))
        row += ell + 1
    with pytest.raises(ValueError):
        harmonic_meridian_stack(4, 4, theta)


# ======================================================================
# Bessel J0 / J2
# ======================================================================

def test_bessel_matches_reference_both_branches():
    x = np.concatenate([np.linspace(0.0, 7.999, 400),
                        np.linspace(8.0, 300.0, 600),
                        [1e4, 3e5, 1e6]])
    assert_allclose(bessel_j(0, x), special.j0(x), rtol=0, atol=1e-12)
    assert_allclose(bessel_j(2, x), special.jv(2, x), rtol=0, atol=1e-12)


def test_bessel_scalar_and_errors():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(2, 0.0) == 0.0
    assert isinstance(bessel_j(0, 5.0), float)
    with pytest.raises(ValueError):
        bessel_j(1, 2.0)
    with pytest.raises(ValueError):
        bessel_j(0, -0.5)


def test_bessel_first_zero_bracketed():
    # j_{0,1} = 2.404825557695773; sign change must bracket it tightly
    lo, hi = 2.40482555, 2.40482556
    assert bessel_j(0, lo) > 0.0 > bessel_j(0, hi)


# ======================================================================
# Small-angle Legendre approximation
# ======================================================================

def test_hilb_approx_pointwise_error():
    got = hilb_approx_p(100, 0.01)
    exact = legendre_p(100, np.cos(0.01))
    assert abs(got - exact) < 1e-4


@pytest.mark.parametrize("ell", [20, 100, 400])
def test_hilb_approx_uniform_small_angle(ell):
    theta = np.linspace(1e-4, 0.1, 120)
    err = np.abs(hilb_approx_p(ell, theta) - legendre_p(ell, np.cos(theta)))
    assert err.max() < 1e-3


def test_hilb_approx_rejects_nonpositive_angle():
    with pytest.raises(ValueError):
        hilb_approx_p(10, 0.0)
    with pytest.raises(ValueError):
        hilb_approx_p(10, [-0.2])
