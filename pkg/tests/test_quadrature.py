import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from nonlocal_toeplitz.basis import poly1d
from nonlocal_toeplitz.quadrature import (
    QuadratureTable, SeparableTerm, adaptive_cubature, convolution_weight, difference_weight, gauss_legendre_unit,
    integrate_double_smooth, integrate_single, integrate_singular_diagonal, integrate_touching_pair,
    radial_corner_cubature, vertex_graded_cubature,
)


def test_gauss_small_rules():
    x, w = gauss_legendre_unit(1)
    assert x.tolist() == [0.5] and w.tolist() == [1.0]
    x, w = gauss_legendre_unit(2)
    assert np.allclose(x, [0.5 - 1 / (2 * math.sqrt(3)), 0.5 + 1 / (2 * math.sqrt(3))], rtol=0, atol=1e-15)
    assert np.allclose(w, [0.5, 0.5], rtol=0, atol=1e-15)
    assert x**3 @ w == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("n", [0, 65])
def test_gauss_range(n):
    with pytest.raises(ValueError):
        gauss_legendre_unit(n)


@given(st.integers(1, 20), st.data())
def test_gauss_exactness(n, data):
    k = data.draw(st.integers(0, 2 * n - 1))
    x, w = gauss_legendre_unit(n)
    assert x**k @ w == pytest.approx(1 / (k + 1), rel=1e-13)


@given(st.integers(1, 3), st.integers(1, 4), st.data())
def test_tensor_monomial_exactness(d, n, data):
    t = QuadratureTable(d, n)
    a = data.draw(st.lists(st.integers(0, 2 * n - 1), min_size=d, max_size=d))
    b = data.draw(st.lists(st.integers(0, 2 * n - 1), min_size=d, max_size=d))
    exact = np.prod([1 / ((ai + 1) * (bi + 1)) for ai, bi in zip(a, b)])
    got = integrate_double_smooth(t, lambda x, y: np.prod(x**a * y**b, axis=1))
    assert got == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("d,n", [(1, 7), (2, 6), (3, 4)])
def test_table_invariants(d, n):
    t = QuadratureTable(d, n)
    assert t.X.shape == (n**d, d) and t.V.shape == (n ** (2 * d), d)
    assert t.W_single.sum() == pytest.approx(1, abs=1e-14)
    assert t.W_double.sum() == pytest.approx(1, abs=1e-13)
    assert np.all((t.X > 0) & (t.X < 1))


def test_smooth_examples():
    t = QuadratureTable(1, 7)
    assert integrate_double_smooth(t, lambda x, y: np.ones(len(x))) == pytest.approx(1, abs=1e-14)
    assert integrate_double_smooth(QuadratureTable(1, 2), lambda x, y: x[:, 0] * y[:, 0]) == pytest.approx(0.25, abs=1e-15)
    val = integrate_double_smooth(t, lambda x, y: np.exp(x[:, 0] + y[:, 0]))
    assert val == pytest.approx((math.e - 1) ** 2, rel=1e-10)
    assert integrate_single(QuadratureTable(2, 3), lambda x: x[:, 0] * x[:, 1] ** 2) == pytest.approx(1 / 6, rel=1e-14)


def test_non_finite_reported():
    t = QuadratureTable(1, 3)
    with pytest.raises(FloatingPointError, match="x="):
        integrate_double_smooth(t, lambda x, y: np.full(len(x), np.nan))


def test_adaptive_cubature_smooth_and_kink():
    r = adaptive_cubature(lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1]), [0, 0], [1, 2], rel_tol=1e-12)
    assert r.converged and r.value == pytest.approx((math.e - 1) * math.sin(2), rel=1e-12)
    r = adaptive_cubature(lambda p: np.abs(p[:, 0] - 1 / 3), [0], [1], rel_tol=1e-11)
    assert r.value == pytest.approx(5 / 18, rel=1e-10)
    r = adaptive_cubature(lambda p: np.abs(p[:, 0] - 1 / 3), [0], [1], rel_tol=1e-14, max_depth=3)
    assert not r.converged


def test_m_trick_constant():
    for d in (1, 2):
        r = integrate_singular_diagonal(QuadratureTable(d, 3), lambda x, y: np.ones(len(y)))
        assert r.value == pytest.approx(1, rel=1e-12)


def test_m_trick_inverse_sqrt_1d():
    f = lambda x, y: np.abs(x - y)[:, 0] ** -0.5  # noqa: E731
    r = integrate_singular_diagonal(QuadratureTable(1, 7), f, rel_tol=1e-10, outer="adaptive")
    assert r.converged
    assert abs(r.value / (8 / 3) - 1) <= 1e-8


def test_m_trick_gauss_outer_is_coarse():
    # the inner integral has a sqrt kink in x, so a fixed outer Gauss rule converges slowly
    f = lambda x, y: np.abs(x - y)[:, 0] ** -0.5  # noqa: E731
    r = integrate_singular_diagonal(QuadratureTable(1, 7), f)
    assert 1e-6 < abs(r.value / (8 / 3) - 1) < 1e-2


def test_m_trick_inverse_distance_2d():
    # independent reference: reduce to the difference variable and use scipy's dblquad
    ref = 4 * integrate.dblquad(lambda b, a: (1 - a) * (1 - b) / math.hypot(a, b), 0, 1, 0, 1,
                                epsabs=1e-13, epsrel=1e-12)[0]
    f = lambda x, y: 1 / np.linalg.norm(x - y, axis=-1)  # noqa: E731
    r = integrate_singular_diagonal(QuadratureTable(2, 16), f, rel_tol=1e-8)
    assert abs(r.value / ref - 1) <= 1e-4


def test_m_trick_matches_smooth_rule():
    t = QuadratureTable(2, 4)
    f = lambda x, y: np.exp(-np.sum((x - y) ** 2, axis=1)) * (1 + np.sum(x * y, axis=1))  # noqa: E731
    assert integrate_singular_diagonal(t, f, outer="adaptive", rel_tol=1e-11).value == pytest.approx(
        integrate_double_smooth(QuadratureTable(2, 10), f), rel=1e-9)


def test_unknown_outer():
    with pytest.raises(ValueError):
        integrate_singular_diagonal(QuadratureTable(1, 2), lambda x, y: x[:, 0], outer="simpson")


def test_vertex_graded():
    # int_0^1 int_0^1 (x^2 + y^2)^(-1/2) = 2 asinh(1)
    r = vertex_graded_cubature(lambda p: 1 / np.hypot(p[:, 0], p[:, 1]), [0, 0], [1, 1], [0, 0], rel_tol=1e-11)
    assert r.converged and r.value == pytest.approx(2 * math.asinh(1), rel=1e-10)
    r = vertex_graded_cubature(lambda p: (1 - p[:, 0]) ** -0.7, [0], [1], [1], rel_tol=1e-11)
    assert r.value == pytest.approx(1 / 0.3, rel=1e-9)


def test_radial_corner():
    # |u|^(-1) on the box [-1, 0] x [0, 1]; the radial factor is t^0 times 1/|y|
    r = radial_corner_cubature(lambda u: 1 / np.hypot(u[:, 0], u[:, 1]), [-1, 1], 0.0, rel_tol=1e-12)
    assert r.value == pytest.approx(2 * math.asinh(1), rel=1e-11)
    # 1d: int_0^1 u^-0.6 du, radial factor t^-0.6
    r = radial_corner_cubature(lambda u: np.abs(u[:, 0]) ** -0.6, [1], -0.6, n_radial=2)
    assert r.value == pytest.approx(2.5, rel=1e-13)
    with pytest.raises(ValueError):
        radial_corner_cubature(lambda u: u[:, 0], [1], -1.0)


@given(st.tuples(*[st.integers(0, 3)] * 2), st.floats(-1, 1))
def test_convolution_weight(pq, w):
    p = tuple(np.random.default_rng(pq[0]).normal(size=pq[0] + 1))
    q = tuple(np.random.default_rng(10 + pq[1]).normal(size=pq[1] + 1))
    lo, hi = max(0, -w), min(1, 1 - w)
    ref = integrate.quad(lambda t: np.polynomial.polynomial.polyval(t, p) * np.polynomial.polynomial.polyval(t + w, q),
                         lo, hi, epsabs=1e-14)[0] if hi > lo else 0.0
    assert convolution_weight(p, q, np.array([w]))[0] == pytest.approx(ref, abs=1e-13)
    assert convolution_weight(p, q, np.array([1.5]))[0] == 0


def test_difference_weight_is_hat_autocorrelation():
    # psi products summed over all vertices give the constant 1, so G is prod (1 - |w_j|)
    d = 2
    V = list(itertools.product((0, 1), repeat=d))
    terms = [SeparableTerm(1.0, tuple(poly1d((a,)) for a in u), tuple(poly1d((b,)) for b in v)) for u in V for v in V]
    w = np.random.default_rng(0).uniform(-1, 1, (20, d))
    assert np.allclose(difference_weight(terms, w), np.prod(1 - np.abs(w), axis=1), atol=1e-14)


@pytest.mark.parametrize("d", [1, 2])
def test_touching_pair_radial_vs_graded(d):
    # (psi_0(y) - psi_0(x))^2 / |x - y|^(d + 2s) on the diagonal pair, two independent corner treatments
    s = 0.3
    beta = d + 2 * s
    z = (0,) * d
    one = tuple(poly1d(()) for _ in range(d))
    p0 = tuple(poly1d((0,)) for _ in range(d))
    sq = tuple(poly1d((0, 0)) for _ in range(d))
    terms = [SeparableTerm(1.0, sq, one), SeparableTerm(1.0, one, sq), SeparableTerm(-2.0, p0, p0)]
    prof = lambda r: r ** -beta  # noqa: E731
    a, ok_a = integrate_touching_pair(terms, np.array(z, float), prof, rel_tol=1e-10, power=beta)
    b, ok_b = integrate_touching_pair(terms, np.array(z, float), prof, rel_tol=1e-10)
    assert ok_a and a > 0
    assert a == pytest.approx(b, rel=1e-7)
    if d == 1:
        # closed form in 1d: 2 int_0^1 (1 - w) w^2 w^-beta dw
        assert a == pytest.approx(2 * (1 / (3 - beta) - 1 / (4 - beta)), rel=1e-12)
