"""Linear algebra of the neutral space E^4_2 with signature (+, +, -, -)."""

from __future__ import annotations

import enum

import numpy as np

from .errors import DegenerateTangentPlane, ZeroMeanCurvature
from .jets import Jet

SIGNATURE = np.array([1.0, 1.0, -1.0, -1.0])
GRAM = np.diag(SIGNATURE)
TAU_CAUSAL = 1e-9


class CausalCharacter(enum.Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    ZERO = "zero"


def inner4(x, y):
    """Neutral inner product ``x1 y1 + x2 y2 - x3 y3 - x4 y4``.

    Works on plain arrays (vector axis last) and on Vec4 jets.
    """
    if isinstance(x, Jet) or isinstance(y, Jet):
        prod = x * y if isinstance(x, Jet) else y * x
        return prod.contract(SIGNATURE)
    return np.asarray(x, dtype=float) * np.asarray(y, dtype=float) @ SIGNATURE


def euclid_dot(x, y):
    if isinstance(x, Jet) or isinstance(y, Jet):
        prod = x * y if isinstance(x, Jet) else y * x
        return prod.contract(np.ones(4))
    return np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)


def scale(x):
    """Auxiliary Euclidean norm used for tolerances and residual magnitudes."""
    return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


def causal_character(x, tau=TAU_CAUSAL):
    if tau <= 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    if np.all(np.abs(x) <= tau):
        return CausalCharacter.ZERO
    q = inner4(x, x)
    if abs(q) <= tau * scale(x) ** 2:
        return CausalCharacter.LIGHTLIKE
    return CausalCharacter.SPACELIKE if q > 0 else CausalCharacter.TIMELIKE


def lightcone_member(p, tau=TAU_CAUSAL):
    if tau <= 0:
        raise ValueError("tau must be positive")
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        return False
    return bool(abs(inner4(p, p)) <= tau * scale(p) ** 2)


def solve_normal_frame(fs, ft, H, tau=TAU_CAUSAL):
    """Null normal frame ``(e3, e4)`` with ``e3 = -H`` and ``<e3, e4> = -1``.

    ``e4`` is orthogonal to ``fs`` and ``ft``.  The three linear conditions
    leave the line ``p + lam * e3`` (``e3`` is null and normal); a fourth
    row pinning one coordinate makes the 4x4 system regular, and the null
    condition is then linear in ``lam``.
    """
    fs, ft, H = (np.asarray(v, dtype=float) for v in (fs, ft, H))
    g11, g12, g22 = inner4(fs, fs), inner4(fs, ft), inner4(ft, ft)
    if g11 * g22 - g12**2 >= -tau:
        raise DegenerateTangentPlane(f"tangent plane is not Lorentzian (det={g11 * g22 - g12**2:.3e})")
    if scale(H) <= tau:
        raise ZeroMeanCurvature("mean curvature vector vanishes")
    e3 = -H
    k = int(np.argmax(np.abs(e3)))
    pin = np.zeros(4)
    pin[k] = 1.0
    A = np.stack([SIGNATURE * fs, SIGNATURE * ft, SIGNATURE * e3, pin])
    p = np.linalg.solve(A, np.array([0.0, 0.0, -1.0, 0.0]))
    e4 = p + 0.5 * inner4(p, p) * e3
    return e3, e4


def boost(rapidity, i=0, j=2):
    """Hyperbolic rotation mixing a spacelike axis ``i`` and timelike axis ``j``."""
    L = np.eye(4)
    c, s = np.cosh(rapidity), np.sinh(rapidity)
    L[i, i] = L[j, j] = c
    L[i, j] = L[j, i] = s
    return L


def rotation(angle, i=0, j=1):
    """Rotation within the spacelike pair (0, 1) or the timelike pair (2, 3)."""
    L = np.eye(4)
    c, s = np.cos(angle), np.sin(angle)
    L[i, i] = L[j, j] = c
    L[i, j], L[j, i] = -s, s
    return L


def is_neutral_isometry(L, tol=1e-12):
    L = np.asarray(L, dtype=float)
    return bool(np.allclose(L.T @ GRAM @ L, GRAM, atol=tol))
