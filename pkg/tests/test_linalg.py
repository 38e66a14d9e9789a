import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neutralgeom.errors import DegenerateTangentPlane, ZeroMeanCurvature
from neutralgeom.linalg import (
    GRAM, CausalCharacter, boost, causal_character, inner4, is_neutral_isometry, lightcone_member,
    rotation, solve_normal_frame,
)

vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=4).map(np.array)
R2 = 1.0 / math.sqrt(2.0)


def test_inner4_basis():
    assert inner4([1, 0, 0, 0], [1, 0, 0, 0]) == 1.0
    assert inner4([0, 0, 1, 0], [0, 0, 1, 0]) == -1.0
    assert inner4([1, 0, 1, 0], [1, 0, 1, 0]) == 0.0
    np.testing.assert_array_equal(np.array([[inner4(a, b) for b in np.eye(4)] for a in np.eye(4)]), GRAM)


@given(vec, vec)
def test_inner4_symmetric(x, y):
    assert inner4(x, y) == inner4(y, x)


@given(vec, vec, st.floats(-3, 3))
def test_inner4_bilinear(x, y, lam):
    assert inner4(lam * x + y, y) == pytest.approx(lam * inner4(x, y) + inner4(y, y), abs=1e-8)


def test_causal_character():
    assert causal_character([1, 0, 1, 0], 1e-10) is CausalCharacter.LIGHTLIKE
    assert causal_character([0, 0, 0, 0], 1e-10) is CausalCharacter.ZERO
    assert causal_character([2, 0, 1, 0], 1e-10) is CausalCharacter.SPACELIKE
    assert causal_character([0, 1, 0, 3], 1e-10) is CausalCharacter.TIMELIKE
    # relative tolerance: large null vectors stay null
    assert causal_character([1e6, 0, 1e6, 1e-3], 1e-9) is CausalCharacter.LIGHTLIKE
    with pytest.raises(ValueError):
        causal_character([1, 0, 0, 0], 0.0)


def test_lightcone_member():
    t = 0.7
    assert lightcone_member([math.cos(t), math.sin(t), math.cos(t), math.sin(t)], 1e-12)
    assert not lightcone_member([1, 0, 0, 0], 1e-12)
    assert not lightcone_member([0, 0, 0, 0], 1e-12)


def test_normal_frame_family_i_origin():
    fs = np.array([0, R2, R2, 0])
    ft = np.array([0, -R2, R2, 0])
    H = np.array([-1.0, 0, 0, -1.0])
    e3, e4 = solve_normal_frame(fs, ft, H)
    np.testing.assert_allclose(e3, [1, 0, 0, 1])
    # the null partner with <e3, e4> = -1 (hand solve)
    np.testing.assert_allclose(e4, [-0.5, 0, 0, 0.5], atol=1e-14)
    for cond in (inner4(e4, fs), inner4(e4, ft), inner4(e3, e4) + 1.0, inner4(e4, e4)):
        assert abs(cond) <= 1e-10


def _random_frame_input(rng):
    # a Lorentzian plane and a null normal, pushed through a random neutral isometry
    L = boost(rng.normal(), 0, 2) @ rotation(rng.normal(), 0, 1) @ boost(rng.normal(), 1, 3)
    fs, ft = L @ np.array([0, R2, R2, 0]), L @ np.array([0, -R2, R2, 0])
    H = rng.uniform(0.5, 3.0) * (L @ np.array([-1.0, 0, 0, -1.0]))
    return fs, ft, H


def test_normal_frame_conditions_random():
    rng = np.random.default_rng(7)
    for _ in range(50):
        fs, ft, H = _random_frame_input(rng)
        e3, e4 = solve_normal_frame(fs, ft, H)
        size = max(1.0, np.linalg.norm(e4) ** 2)
        assert abs(inner4(e4, fs)) <= 1e-10 * size
        assert abs(inner4(e4, ft)) <= 1e-10 * size
        assert abs(inner4(e3, e4) + 1.0) <= 1e-10 * size
        assert abs(inner4(e4, e4)) <= 1e-10 * size


def test_normal_frame_scaling():
    rng = np.random.default_rng(3)
    fs, ft, H = _random_frame_input(rng)
    e3, e4 = solve_normal_frame(fs, ft, H)
    e3b, e4b = solve_normal_frame(fs, ft, 2.5 * H)
    np.testing.assert_allclose(e3b, -2.5 * H)
    np.testing.assert_allclose(e4b, e4 / 2.5, atol=1e-12)
    assert inner4(e3b, e4b) == pytest.approx(inner4(e3, e4))


def test_normal_frame_errors():
    with pytest.raises(DegenerateTangentPlane):
        solve_normal_frame([1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1])  # spacelike plane
    with pytest.raises(ZeroMeanCurvature):
        solve_normal_frame([0, R2, R2, 0], [0, -R2, R2, 0], [0, 0, 0, 0])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_boosts_and_rotations_are_isometries(r, a):
    assert is_neutral_isometry(boost(r))
    assert is_neutral_isometry(rotation(a, 2, 3) @ boost(r, 1, 3))
    assert not is_neutral_isometry(rotation(a + 0.1, 0, 2)) or abs(math.sin(a + 0.1)) < 1e-9
