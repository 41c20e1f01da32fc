import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from scalpprice.basis import (
    BasisKind,
    BasisPoly,
    DegreeOverflowError,
    DomainError,
    MeasureConfig,
    eval_basis,
    find_real_roots,
    get_basis,
    integrate_J,
    multiply_in_basis,
    timeshift_D,
    x0_of,
)

from conftest import ALL_KINDS, abscissa, cfg, independent_values


def sample_x(kind, rng, size):
    if kind is BasisKind.SHIFTED_LEGENDRE:
        return rng.uniform(0.0, 1.0, size)
    if kind is BasisKind.LAGUERRE:
        return rng.uniform(0.0, 6.0, size)
    return rng.uniform(-3.0, 0.0, size)


# ---------------------------------------------------------------- evaluation


def test_eval_examples():
    leg = cfg(BasisKind.SHIFTED_LEGENDRE)
    assert eval_basis(leg, 0, 0.37) == 1.0
    assert eval_basis(leg, 1, 1.0) == 1.0
    assert eval_basis(cfg(BasisKind.MONOMIALS), 3, 0.5) == 0.125


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_values_match_numpy_polynomials(kind, rng):
    b = get_basis(cfg(kind, n=12))
    x = sample_x(kind, rng, 50)
    ours = b.values(x)
    ref = independent_values(kind, x, b.N)
    assert np.allclose(ours, ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


def test_domain_and_index_errors():
    with pytest.raises(DomainError):
        eval_basis(cfg(BasisKind.SHIFTED_LEGENDRE), 1, 1.5)
    with pytest.raises(DomainError):
        eval_basis(cfg(BasisKind.LAGUERRE), 1, -0.1)
    with pytest.raises(DomainError):
        eval_basis(cfg(BasisKind.MONOMIALS, n=3), 5, 0.0)
    with pytest.raises(DomainError):
        eval_basis(cfg(BasisKind.MONOMIALS), 1, float("nan"))


def test_measure_config_validation():
    with pytest.raises(ValueError):
        MeasureConfig(BasisKind.LAGUERRE, 1, 10.0)
    with pytest.raises(ValueError):
        MeasureConfig(BasisKind.LAGUERRE, 25, 10.0)
    with pytest.raises(ValueError):
        MeasureConfig(BasisKind.LAGUERRE, 4, 0.0)
    assert MeasureConfig("Laguerre", 4, 1.0).basis_kind is BasisKind.LAGUERRE


@pytest.mark.parametrize("token,kind", [
    ("ShiftedLegendre", BasisKind.SHIFTED_LEGENDRE),
    ("ScalpedMaxIProjectionLegendreShifted", BasisKind.SHIFTED_LEGENDRE),
    ("ScalpedMaxIProjectionLaguerre", BasisKind.LAGUERRE),
    ("ScalpedMaxIProjectionMonomials", BasisKind.MONOMIALS),
    ("monomials", BasisKind.MONOMIALS),
])
def test_measure_tokens(token, kind):
    assert BasisKind.parse(token) is kind


def test_unknown_measure_token():
    with pytest.raises(ValueError):
        BasisKind.parse("Chebyshev")


def test_x0_and_abscissa_map():
    for kind in ALL_KINDS:
        b = get_basis(cfg(kind))
        assert b.x0 == x0_of(b.cfg)
        assert float(b.x_of_age(0.0)) == b.x0
        ages = np.array([0.5, 3.0, 40.0])
        assert np.allclose(b.age_of_x(b.x_of_age(ages)), ages)
        assert np.allclose(b.x_of_age(ages), abscissa(kind, ages, b.tau))


# ---------------------------------------------------------------- products


def test_product_examples():
    for kind in ALL_KINDS:
        c = cfg(kind)
        one = BasisPoly([1.0], c)
        assert np.array_equal(multiply_in_basis(one, one).coeffs[:1], [1.0])
        assert not np.any(multiply_in_basis(one, one).coeffs[1:])
    leg = cfg(BasisKind.SHIFTED_LEGENDRE)
    p1 = BasisPoly([0.0, 1.0], leg)
    sq = multiply_in_basis(p1, p1).coeffs
    assert np.allclose(sq[:3], [1 / 3, 0.0, 2 / 3], atol=1e-15)
    mono = cfg(BasisKind.MONOMIALS)
    x5 = multiply_in_basis(BasisPoly([0, 0, 1], mono), BasisPoly([0, 0, 0, 1], mono)).coeffs
    assert np.array_equal(x5, np.eye(mono.n_moments)[5])


def test_product_overflow_raises():
    c = cfg(BasisKind.LAGUERRE, n=3)  # N = 5, max degree 4
    a = BasisPoly([0, 0, 1], c)
    b = BasisPoly([0, 0, 0, 1], c)
    with pytest.raises(DegreeOverflowError):
        multiply_in_basis(a, b)
    with pytest.raises(DegreeOverflowError):
        BasisPoly(np.ones(7), c)


@pytest.mark.parametrize("kind", ALL_KINDS)
@given(seed=st.integers(0, 2**32 - 1))
def test_product_pointwise(kind, seed):
    rng = np.random.default_rng(seed)
    b = get_basis(cfg(kind, n=5))
    a = rng.normal(size=b.n)
    c = rng.normal(size=b.n)
    x = sample_x(kind, rng, 7)
    prod = b.product(a, c)
    lhs = b.evaluate(prod, x)
    rhs = b.evaluate(a, x) * b.evaluate(c, x)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * (1 + np.abs(rhs).max()))


@pytest.mark.parametrize("kind", ALL_KINDS)
@given(seed=st.integers(0, 2**32 - 1))
def test_operator_matrix_is_bilinear_form(kind, seed):
    rng = np.random.default_rng(seed)
    b = get_basis(cfg(kind, n=5))
    mom = rng.normal(size=b.N)
    a, c = rng.normal(size=b.n), rng.normal(size=b.n)
    M = b.operator(mom)
    assert np.allclose(M, M.T)
    assert math.isclose(a @ M @ c, mom @ b.product(a, c), rel_tol=1e-10, abs_tol=1e-10)


# ---------------------------------------------------------------- D and J


def test_timeshift_examples():
    tau = 7.0
    for kind in ALL_KINDS:
        c = cfg(kind, tau=tau)
        assert not np.any(timeshift_D(c, BasisPoly([1.0], c)).coeffs)
    mono = cfg(BasisKind.MONOMIALS, tau=tau)
    dx = timeshift_D(mono, BasisPoly([0.0, 1.0], mono)).coeffs
    assert np.allclose(dx, np.eye(mono.n_moments)[0] / tau)
    leg = cfg(BasisKind.SHIFTED_LEGENDRE, tau=tau)
    b = get_basis(leg)
    x_coeffs = b.from_monomial([0.0, 1.0])  # x = (P0 + P1) / 2
    assert np.allclose(x_coeffs, [0.5, 0.5])
    dx = timeshift_D(leg, BasisPoly(x_coeffs, leg)).coeffs
    assert np.allclose(dx[:2], x_coeffs / tau)
    assert not np.any(dx[2:])


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_timeshift_matches_finite_difference(kind, rng):
    tau = 5.0
    b = get_basis(cfg(kind, n=6, tau=tau))
    c = np.zeros(b.N)
    c[: b.n] = rng.normal(size=b.n)
    dc = b.timeshift(c)
    ages = np.array([0.3, 1.0, 4.0, 9.0])
    h = 1e-5
    # moving t forward by h shrinks the age by h
    fd = (b.evaluate(c, b.x_of_age(ages - h)) - b.evaluate(c, b.x_of_age(ages + h))) / (2 * h)
    assert np.allclose(b.evaluate(dc, b.x_of_age(ages)), fd, rtol=1e-6, atol=1e-7)
    dwc = b.timeshift(c, measure_weighted=True)
    assert np.allclose(dwc, dc + c / (2 * tau))


def test_integrate_zero():
    for kind in ALL_KINDS:
        c = cfg(kind)
        assert not np.any(integrate_J(c, BasisPoly([0.0], c)).coeffs)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_integrate_matches_quadrature(kind, rng):
    tau = 3.0
    b = get_basis(cfg(kind, n=5, tau=tau))
    c = rng.normal(size=b.n)
    jc = b.integrate(c)
    for age in (0.0, 0.7, 4.0):
        # integral over older times: ages from `age` to infinity
        val, _ = integrate.quad(lambda a: b.evaluate(c, b.x_of_age(a)) * math.exp(-a / tau),
                                age, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
        ours = math.exp(-age / tau) * b.evaluate(jc, b.x_of_age(age))
        assert math.isclose(ours, val, rel_tol=1e-9, abs_tol=1e-9)
    assert math.isclose(b.integral(c), b.evaluate(jc, b.x0), rel_tol=1e-12, abs_tol=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_integrate_inverts_weighted_derivative(kind, rng):
    # d/dt [omega J(p)] = omega p, i.e. (D + 1/tau) J = identity on polynomials
    b = get_basis(cfg(kind, n=5, tau=2.5))
    c = np.zeros(b.N)
    c[: b.n] = rng.normal(size=b.n)
    back = b.D @ b.integrate(c) + b.integrate(c) / b.tau
    assert np.allclose(back, c, atol=1e-10 * np.abs(c).max())


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_gram_matrix_matches_quadrature(kind):
    tau = 2.0
    b = get_basis(cfg(kind, n=4, tau=tau))
    n = b.n
    G = np.empty((n, n))
    for j in range(n):
        for k in range(n):
            G[j, k], _ = integrate.quad(
                lambda a: b.values(b.x_of_age(a), n)[j] * b.values(b.x_of_age(a), n)[k]
                * math.exp(-a / tau), 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert np.allclose(b.G, G, rtol=1e-9, atol=1e-12)
    assert np.allclose(b.operator(b.g), b.G, rtol=1e-12, atol=1e-14)


# ---------------------------------------------------------------- anchor shift


@pytest.mark.parametrize("kind", ALL_KINDS)
@given(dt=st.floats(0.0, 40.0))
def test_shift_matrix_moves_anchor(kind, dt):
    tau = 6.0
    b = get_basis(cfg(kind, n=6, tau=tau))
    ages = np.array([0.0, 0.5, 3.0, 11.0])
    weights = np.array([1.0, -2.0, 0.7, 3.0])
    mom_old = (weights * np.exp(-ages / tau)) @ b.values(b.x_of_age(ages))
    new_ages = ages + dt
    mom_new = (weights * np.exp(-new_ages / tau)) @ b.values(b.x_of_age(new_ages))
    shifted = b.shift_matrix(dt) @ mom_old
    scale = (np.abs(weights) * np.exp(-new_ages / tau)) @ np.abs(b.values(b.x_of_age(new_ages)))
    assert np.all(np.abs(shifted - mom_new) <= 1e-11 * (scale + 1e-300) + 1e-300)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_hold_increment_is_interval_moment(kind):
    tau = 4.0
    b = get_basis(cfg(kind, n=12, tau=tau))
    gx, gw = np.polynomial.legendre.leggauss(40)
    for dt in (1e-6, 0.3, 5.0, 60.0):
        # composite 40-point Gauss rule on 64 panels of [0, dt]
        edges = np.linspace(0.0, dt, 65)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        ages = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        wts = (half[:, None] * gw[None, :]).ravel() * np.exp(-ages / tau)
        vals = independent_values(kind, abscissa(kind, ages, tau), b.N)
        ref = wts @ vals
        scale = wts @ np.abs(vals)
        assert np.all(np.abs(b.hold_increments([dt])[0] - ref) <= 1e-10 * scale)


def test_shift_matrix_huge_gap_forgets_history():
    for kind in ALL_KINDS:
        b = get_basis(cfg(kind, tau=1.0))
        S = b.shift_matrix(1e6)
        assert np.all(np.isfinite(S))
        assert np.abs(S).max() < 1e-200
    with pytest.raises(ValueError):
        get_basis(cfg(BasisKind.LAGUERRE)).shift_matrix(-1.0)


# ---------------------------------------------------------------- roots


def test_root_examples():
    mono = cfg(BasisKind.MONOMIALS)
    assert np.allclose(find_real_roots(mono, BasisPoly([-1.0, 0.0, 1.0], mono)), [-1.0, 1.0])
    leg = cfg(BasisKind.SHIFTED_LEGENDRE)
    assert np.allclose(find_real_roots(leg, BasisPoly([0.0, 1.0], leg)), [0.5])
    with pytest.raises(ValueError):
        find_real_roots(leg, BasisPoly([0.0], leg))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_planted_roots_recovered(kind, rng):
    b = get_basis(cfg(kind, n=6))
    for _ in range(20):
        if kind is BasisKind.SHIFTED_LEGENDRE:
            planted = np.sort(rng.uniform(0.02, 0.98, 6))
        elif kind is BasisKind.LAGUERRE:
            planted = np.sort(rng.uniform(0.05, 5.0, 6))
        else:
            planted = np.sort(rng.uniform(-3.0, 3.0, 6))
        if np.min(np.diff(planted)) < 0.05:
            continue
        mono = np.polynomial.polynomial.polyfromroots(planted) * rng.uniform(0.5, 2.0)
        roots = b.real_roots(b.from_monomial(mono))
        assert roots.shape == planted.shape
        assert np.allclose(roots, planted, atol=1e-8)


def test_roots_outside_domain_are_dropped():
    b = get_basis(cfg(BasisKind.SHIFTED_LEGENDRE))
    mono = np.polynomial.polynomial.polyfromroots([0.25, 1.5, -0.5])
    assert np.allclose(b.real_roots(b.from_monomial(mono)), [0.25])
    assert np.allclose(b.real_roots(b.from_monomial(mono), domain_only=False), [-0.5, 0.25, 1.5])


@given(seed=st.integers(0, 2**32 - 1))
def test_monomial_roundtrip(seed):
    rng = np.random.default_rng(seed)
    for kind in ALL_KINDS:
        b = get_basis(cfg(kind, n=4))
        c = rng.normal(size=b.N)
        assert np.allclose(b.from_monomial(b.to_monomial(c)), c, atol=1e-9 * np.abs(c).max())
