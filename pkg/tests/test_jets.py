import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutralgeom import jets as J
from neutralgeom.errors import (
    DivisionByZeroConstantTerm, NegativeSqrtConstantTerm, OrderOutOfRange, SamplerDomainError,
)

coef = st.floats(-2.0, 2.0, allow_nan=False)
point = st.floats(-1.0, 1.0, allow_nan=False)


def random_jet(values, s=0.0, t=0.0, degree=4):
    return J.Jet(np.array(values[: J.ncoef(degree)], dtype=float), degree, (np.asarray(s), np.asarray(t)))


jet_coeffs = st.lists(coef, min_size=15, max_size=15)


def test_monomial_order_and_count():
    assert J.ncoef(4) == 15
    assert list(J.monomials(2)) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_s_times_s():
    S, _ = J.variables(0.0, 0.0)
    assert S.coefficient(1, 0) == 1.0
    sq = S * S
    expected = np.zeros(15)
    expected[list(J.monomials(4)).index((2, 0))] = 1.0
    np.testing.assert_array_equal(sq.coeffs, expected)


def test_sqrt_binomial_series():
    # sqrt(1 + x) = 1 + x/2 - x^2/8 + ..., x = s^2
    S, _ = J.variables(0.0, 0.0)
    r = J.sqrt(1.0 + S * S)
    assert r.coefficient(0, 0) == pytest.approx(1.0)
    assert r.coefficient(2, 0) == pytest.approx(0.5)
    assert r.coefficient(4, 0) == pytest.approx(-0.125)
    assert r.coefficient(1, 1) == pytest.approx(0.0)


def test_sin_maclaurin():
    _, T = J.variables(0.0, 0.0)
    r = J.sin(T)
    assert r.coefficient(0, 1) == pytest.approx(1.0)
    assert r.coefficient(0, 3) == pytest.approx(-1.0 / 6.0)
    assert r.coefficient(0, 2) == pytest.approx(0.0)


def test_composites_match_closed_form_derivatives():
    s0, t0 = 0.3, -0.4
    S, T = J.variables(s0, t0)
    u = J.exp(-T) * J.sqrt(S * S + 1.0)
    # d^3/ds^2 dt of e^-t sqrt(s^2+1) = -e^-t (s^2+1)^(-3/2)
    assert u.diff(2, 1) == pytest.approx(-math.exp(-t0) * (s0 * s0 + 1.0) ** -1.5)
    v = J.cos(S * T) / (2.0 + S)
    h = 1e-4
    fv = lambda s, t: math.cos(s * t) / (2.0 + s)
    fd = (fv(s0 + h, t0) - fv(s0 - h, t0)) / (2 * h)
    assert v.diff(1, 0) == pytest.approx(fd, rel=1e-7)


def test_errors():
    S, _ = J.variables(0.0, 0.0)
    with pytest.raises(DivisionByZeroConstantTerm):
        1.0 / S
    with pytest.raises(NegativeSqrtConstantTerm):
        J.sqrt(S - 1.0)
    with pytest.raises(OrderOutOfRange):
        S.coefficient(3, 2)
    with pytest.raises(OrderOutOfRange):
        J.jet_extract(S, 5, 0)


def test_jet_extract_factorials():
    S, T = J.variables(0.0, 0.0)
    u = S**2 * T**2
    assert u.coefficient(2, 2) == pytest.approx(1.0)
    assert J.jet_extract(u, 2, 2) == pytest.approx(4.0)
    assert J.jet_extract(u, 0, 0) == pytest.approx(0.0)


def test_batched_shapes_and_vector_values():
    s = np.linspace(-1, 1, 5)
    S, T = J.variables(s, 0.5 * s)
    v = J.stack([S, T, S * T, 1.0], S)
    assert v.shape == (5, 4)
    np.testing.assert_allclose(v.diff(1, 1)[:, 2], 1.0)
    np.testing.assert_allclose(v.value[:, 3], 1.0)


@given(jet_coeffs, jet_coeffs)
def test_leibniz(a, b):
    u, v = random_jet(a), random_jet(b)
    lhs = J.jet_extract(u * v, 1, 0)
    rhs = u.diff(1, 0) * v.value + u.value * v.diff(1, 0)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(jet_coeffs, jet_coeffs, jet_coeffs)
def test_product_associative_after_truncation(a, b, c):
    u, v, w = random_jet(a), random_jet(b), random_jet(c)
    np.testing.assert_allclose(((u * v) * w).coeffs, (u * (v * w)).coeffs, atol=1e-10)


@given(jet_coeffs, jet_coeffs)
def test_product_commutative_and_distributive(a, b):
    u, v = random_jet(a), random_jet(b)
    np.testing.assert_allclose((u * v).coeffs, (v * u).coeffs, atol=1e-12)
    np.testing.assert_allclose((u * (v + 1.0)).coeffs, (u * v + u).coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(point, point)
def test_chain_rule_matches_fd(s0, t0):
    def sampler(s, t):
        return np.stack([np.exp(s * t) * np.sin(s + 2 * t), np.sqrt(2.0 + s * s) * np.cos(t),
                         np.zeros_like(s), s], axis=-1)

    S, T = J.variables(s0, t0)
    analytic = J.stack([J.exp(S * T) * J.sin(S + 2.0 * T), J.sqrt(2.0 + S * S) * J.cos(T), 0.0, S], S)
    fd = J.fd_jet(sampler, s0, t0, h=1e-2)
    np.testing.assert_allclose(fd.coeffs, analytic.coeffs, atol=5e-6)


def test_fd_exact_for_quadratics():
    fd = J.fd_jet(lambda s, t: np.stack([s * s, 0 * s, 0 * s, 0 * s], -1), 0.0, 0.0, h=1e-2)
    assert fd.coefficient(2, 0)[0] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(J.jet_extract(fd, 2, 0), [2.0, 0, 0, 0], atol=1e-9)


def test_fd_exp_mixed_fourth_derivative():
    fd = J.fd_jet(lambda s, t: np.stack([np.exp(s + t), 0 * s, 0 * s, 0 * s], -1), 0.0, 0.0,
                  h=1e-2, order=4)
    assert fd.coefficient(2, 2)[0] == pytest.approx(0.25, abs=1e-6)


def test_fd_constant_sampler():
    fd = J.fd_jet(lambda s, t: np.broadcast_to([3.0, -1.0, 2.0, 0.5], np.shape(s) + (4,)), 0.4, 0.1)
    np.testing.assert_allclose(fd.value, [3.0, -1.0, 2.0, 0.5])
    assert np.max(np.abs(fd.coeffs[1:])) < 1e-12


def test_fd_order2_and_richardson():
    f = lambda s, t: np.stack([np.sin(s) * np.exp(t)] * 4, -1)
    plain = J.fd_jet(f, 0.2, 0.1, h=1e-2, order=2)
    rich = J.fd_jet(f, 0.2, 0.1, h=1e-2, order=2, richardson=True)
    exact = math.cos(0.2) * math.exp(0.1)
    assert abs(rich.diff(1, 0)[0] - exact) < abs(plain.diff(1, 0)[0] - exact)


def test_fd_default_step_scales_with_base_point():
    h = J.default_step(np.array([0.5, 4.0]), np.array([0.0, -1.0]))
    assert h[0] == pytest.approx(J.EPS ** 0.125)
    assert h[1] == pytest.approx(4.0 * J.EPS ** 0.125)


def test_fd_sampler_domain_error():
    def sampler(s, t):
        if np.any(s < 0):
            raise ValueError("outside domain")
        return np.stack([s, s, s, s], -1)

    with pytest.raises(SamplerDomainError):
        J.fd_jet(sampler, 0.0, 0.0)
    with pytest.raises(SamplerDomainError):
        J.fd_jet(lambda s, t: np.stack([np.log(s)] * 4, -1), 0.0, 0.0)


def test_central_weights_are_exact():
    r, w = J.central_weights(2, 4)
    assert r == 2
    np.testing.assert_allclose(w, [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])


def test_antiderivative_t():
    _, T = J.variables(0.0, 0.5, 3)
    U = J.cos(T).antiderivative_t(np.sin(0.5))
    _, T4 = J.variables(0.0, 0.5, 4)
    np.testing.assert_allclose(U.coeffs, J.sin(T4).coeffs, atol=1e-14)
