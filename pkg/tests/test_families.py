import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutralgeom import inner4, solve_eta_prime
from neutralgeom.errors import (
    BranchAmbiguity, CurveConstraintViolation, DegenerateH, InconsistentConstraints,
    LNotFunctionOfT, NoRealRoot, RankDeficiency, SpecError, VanishingCurvature,
)
from neutralgeom.families import BUILTINS, builtin, curve_defects_ii, generate, parse_family_spec

I3 = BUILTINS["iii-I3"]


def circle(t):
    c, s = np.cos(t), np.sin(t)
    return np.stack([c, s, c, s], -1), np.stack([-s, c, -s, c], -1), np.stack([-c, -s, -c, -s], -1)


# -- family (i)


def test_family_i_needs_psi_st():
    with pytest.raises(DegenerateH):
        generate({"family": "i", "psi": "s + t"})
    with pytest.raises(DegenerateH):
        generate({"family": "i", "psi": "s^2 + t^3"})


def test_family_i_mean_curvature_is_psi_st():
    srf = builtin("i-exp")
    rep = srf.validation
    # H is null, so its Euclidean size is the only scale; it grows like psi_st = e^(s+t)
    assert rep.max("quasiminimal_null") <= 1e-12
    assert np.all(rep.residuals["quasiminimal_nonzero"] > 0)


# -- family (ii)


def test_family_ii_defect_order():
    spec = dict(BUILTINS["ii-trig"], w=["0", "0", "0", "0"])
    with pytest.raises(CurveConstraintViolation) as err:
        generate(spec)
    assert err.value.condition == "<z,w'> = -1"
    spec = dict(BUILTINS["ii-trig"], z=["cos(s)", "sin(s)", "0", "sin(s)"])
    with pytest.raises(CurveConstraintViolation) as err:
        generate(spec)
    assert err.value.condition == "<z,z> = 0"


@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 5.0))
def test_family_ii_rescaling(lam):
    spec = parse_family_spec({
        "family": "ii",
        "z": [f"{lam}*cos(s)", f"{lam}*sin(s)", f"{lam}*cos(s)", f"{lam}*sin(s)"],
        "w": [f"-sin(s)/(2*{lam})", f"cos(s)/(2*{lam})", f"sin(s)/(2*{lam})", f"-cos(s)/(2*{lam})"],
    })
    s = np.linspace(-1, 1, 21)
    for defect in curve_defects_ii(spec.z, spec.w, s).values():
        assert np.max(np.abs(defect)) <= 1e-12


def test_family_ii_is_flat():
    rep = builtin("ii-trig").validation
    assert np.max(np.abs(rep.values["K"])) <= 1e-9
    assert rep.max("biconservative") <= 1e-8


# -- eta' solve


def test_eta_prime_I3_closed_form():
    t = np.linspace(0.0, 1.0, 11)
    A, A1, A2 = circle(t)
    a = np.exp(t / 2)
    ep = solve_eta_prime(A, A1, a)
    c, s = np.cos(t), np.sin(t)
    expected = (np.exp(-t / 2) / 2)[:, None] * np.stack([s, -c, -s, c], -1)
    np.testing.assert_allclose(ep, expected, atol=1e-14)
    np.testing.assert_allclose(inner4(ep, ep), 0.0, atol=1e-14)
    np.testing.assert_allclose(inner4(ep, A), 0.0, atol=1e-14)
    np.testing.assert_allclose(inner4(ep, A1), -1 / a, atol=1e-14)
    # the remaining condition <eta', alpha''> = (2a' - aL)/a^2 holds with L = 1
    np.testing.assert_allclose(inner4(ep, A2), (2 * 0.5 * a - a) / a**2, atol=1e-14)
    # doubling a halves <eta', alpha'>
    np.testing.assert_allclose(inner4(solve_eta_prime(A, A1, 2 * a), A1), -0.5 / a, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=8, max_size=8), st.floats(0.2, 3.0), st.floats(-1, 1),
       st.sampled_from(["small", "large"]))
def test_eta_prime_conditions_general(xs, a, mu, branch):
    A, A1 = np.array(xs[:4]), np.array(xs[4:])
    try:
        ep = solve_eta_prime(A, A1, a, mu=mu, branch=branch)
    except (RankDeficiency, NoRealRoot, BranchAmbiguity):
        return
    size = 1 + np.max(np.abs(ep)) ** 2
    assert abs(inner4(ep, ep)) <= 1e-8 * size
    assert abs(inner4(ep, A)) <= 1e-8 * size
    assert abs(inner4(ep, A1) + 1 / a) <= 1e-8 * size


def test_eta_prime_branches():
    A, A1 = np.array([1.0, 0.2, 0.0, 0.3]), np.array([0.0, 1.0, 0.4, 0.0])
    small = solve_eta_prime(A, A1, 1.0, branch="small")
    large = solve_eta_prime(A, A1, 1.0, branch="large")
    assert np.linalg.norm(small) < np.linalg.norm(large)
    with pytest.raises(NoRealRoot):
        solve_eta_prime(np.array([0.1, 1.2, 0.0, 0.0]), np.array([-0.7, 0.4, 0.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        solve_eta_prime(A, A1, 1.0, branch="continuous")


def test_eta_prime_errors():
    A, A1, _ = circle(np.array([0.3]))
    with pytest.raises(RankDeficiency):
        solve_eta_prime(A, 2 * A, 1.0)
    with pytest.raises(CurveConstraintViolation):
        solve_eta_prime(A, A1, -1.0)


# -- family (iii)


def test_family_iii_gates():
    with pytest.raises(InconsistentConstraints):
        generate(dict(I3, a="exp(t)"))
    with pytest.raises(LNotFunctionOfT):
        generate(dict(I3, m="s^2/2"))
    with pytest.raises(VanishingCurvature):
        generate(dict(I3, m="s*t + 1"))
    with pytest.raises(CurveConstraintViolation):
        generate(dict(I3, alpha=["cos(t)", "sin(t)", "cos(t)", "0"]))
    with pytest.raises(CurveConstraintViolation):
        generate(dict(I3, a="-exp(t/2)"))


def test_I3_alpha_decomposition():
    assert builtin("iii-I3").info["alpha_decomposition_residual"] <= 1e-8


def test_I3_e3_is_a_multiple_of_alpha():
    srf = builtin("iii-I3")
    rep = srf.validation
    t = rep.t
    # e3 = B(t) alpha with B = -e^(t/2) (e^(-2t) + 5/4), so h3_22 = B/a
    np.testing.assert_allclose(rep.values["h3_22"], -(np.exp(-2 * t) + 1.25), atol=1e-9)
    info = srf.info["B"]
    assert info["off_line"] <= 1e-9
    B = -np.exp(t / 2) * (np.exp(-2 * t) + 1.25)
    np.testing.assert_allclose([info["min"], info["max"]], [B.min(), B.max()], atol=1e-9)


def test_I3_eta_quadrature():
    srf = builtin("iii-I3")
    t = np.linspace(0.0, 1.0, 9)
    # at s = 0 the position is eta - a m alpha, with m(0, t) = e^(-t)
    A, _, _ = circle(t)
    eta = srf.position(np.zeros_like(t), t) + (np.exp(t / 2) * np.exp(-t))[:, None] * A
    e, c, s = np.exp(-t / 2), np.cos(t), np.sin(t)
    k = -0.5
    isin = (e * (k * s - c) + 1) / 1.25  # int_0^t e^(k u) sin u du
    icos = (e * (k * c + s) - k) / 1.25
    expected = 0.5 * np.stack([isin, -icos, -isin, icos], -1)
    np.testing.assert_allclose(eta, expected, atol=1e-12)


@pytest.mark.parametrize("name", ["i-st", "i-exp", "ii-trig", "iii-I3"])
def test_builtins_are_integrable_isometric(name):
    rep = builtin(name).validation
    for key in ("gauss", "codazzi", "ricci"):
        assert rep.max(key) <= 1e-7
    assert rep.max("isometry") <= 1e-7


# -- specs


def test_spec_parse_errors():
    cases = [
        ({"family": "iv"}, "family"),
        ({"family": "i"}, "psi"),
        ({"family": "i", "psi": "s*t", "colour": 1}, "colour"),
        ({"family": "i", "psi": "foo(s)"}, "psi"),
        ({"family": "i", "psi": "s*u"}, "psi"),
        (dict(I3, alpha=["cos(s)", "sin(t)", "cos(t)", "sin(t)"]), "alpha"),
        (dict(I3, alpha=["cos(t)", "sin(t)"]), "alpha"),
        (dict(I3, branch="continuous"), "branch"),
        (dict(I3, eta0=[0, 0]), "eta0"),
        ({"family": "i", "psi": "s*t", "domain": [1, 0, 0, 1]}, "domain"),
    ]
    for data, field in cases:
        with pytest.raises(SpecError) as err:
            generate(data)
        assert str(err.value).startswith(field), (data, str(err.value))
    with pytest.raises(SpecError):
        parse_family_spec([1, 2])
    with pytest.raises(SpecError):
        builtin("nope")


def test_spec_hash_is_deterministic():
    a = generate(dict(BUILTINS["i-st"]))
    b = generate(dict(reversed(list(BUILTINS["i-st"].items()))))
    c = generate(dict(BUILTINS["i-st"], psi="2*s*t"))
    assert a.spec_hash == b.spec_hash != c.spec_hash
