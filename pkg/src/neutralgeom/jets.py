"""Truncated bivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a function of ``(s, t)``
around a base point, truncated at a fixed total degree.  Coefficient
``c[i, j]`` approximates ``d^(i+j) u / ds^i dt^j`` divided by ``i! j!``.

Coefficients are stored flattened along axis 0, ordered by total degree, so
truncating to a lower degree is a plain slice.  Any trailing axes are
"value" axes and broadcast like ordinary numpy arrays: a batch of Vec4 jets
over ``N`` base points has ``coeffs.shape == (ncoef, N, 4)``.

Differentiation lowers the degree by one, so every derived quantity carries
the number of orders it is actually exact to.  Mixing jets of different
degree truncates to the smaller one.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import (
    DivisionByZeroConstantTerm,
    NegativeSqrtConstantTerm,
    OrderOutOfRange,
    SamplerDomainError,
)

DEFAULT_DEGREE = 4


def ncoef(degree):
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def monomials(degree):
    """Exponent pairs ``(i, j)`` in storage order."""
    return tuple((i, n - i) for n in range(degree + 1) for i in range(n, -1, -1))


@lru_cache(maxsize=None)
def _index(degree):
    return {mon: k for k, mon in enumerate(monomials(degree))}


@lru_cache(maxsize=None)
def _product_table(degree):
    mons = monomials(degree)
    idx = _index(degree)
    rows = []
    for p, (a, b) in enumerate(mons):
        for q, (c, d) in enumerate(mons):
            if a + b + c + d <= degree:
                rows.append((idx[(a + c, b + d)], p, q))
    rows.sort()
    target = np.array([r[0] for r in rows])
    left = np.array([r[1] for r in rows])
    right = np.array([r[2] for r in rows])
    starts = np.searchsorted(target, np.arange(len(mons)))
    return left, right, starts


@lru_cache(maxsize=None)
def _derivative_table(degree, axis):
    # d/ds maps c[i+1, j] * (i+1) -> c[i, j]; the result has degree - 1
    src_idx = _index(degree)
    src, fac = [], []
    for i, j in monomials(degree - 1):
        if axis == 0:
            src.append(src_idx[(i + 1, j)])
            fac.append(i + 1)
        else:
            src.append(src_idx[(i, j + 1)])
            fac.append(j + 1)
    return np.array(src), np.array(fac, dtype=float)


def _expand(factors, ndim):
    return factors.reshape((-1,) + (1,) * ndim)


class Jet:
    """Truncated Taylor expansion of a scalar or vector field in ``(s, t)``.

    ``base`` optionally records the expansion point(s) as a pair of arrays;
    it is carried through arithmetic for bookkeeping only.
    """

    __array_ufunc__ = None  # make ndarray <op> Jet defer to Jet

    def __init__(self, coeffs, degree=DEFAULT_DEGREE, base=None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != ncoef(degree):
            raise ValueError(
                f"degree {degree} needs {ncoef(degree)} coefficients, got {coeffs.shape[0]}"
            )
        self.coeffs = coeffs
        self.degree = degree
        self.base = base

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, degree=DEFAULT_DEGREE, base=None):
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros((ncoef(degree),) + value.shape)
        coeffs[0] = value
        return cls(coeffs, degree, base)

    @classmethod
    def from_derivatives(cls, derivs, degree=DEFAULT_DEGREE, base=None):
        """Build from a mapping ``(i, j) -> d^(i+j)u/ds^i dt^j`` at the base."""
        first = np.asarray(next(iter(derivs.values())), dtype=float)
        coeffs = np.zeros((ncoef(degree),) + first.shape)
        for k, (i, j) in enumerate(monomials(degree)):
            if (i, j) in derivs:
                coeffs[k] = np.asarray(derivs[(i, j)]) / (math.factorial(i) * math.factorial(j))
        return cls(coeffs, degree, base)

    # -- inspection -------------------------------------------------------
    @property
    def shape(self):
        return self.coeffs.shape[1:]

    @property
    def value(self):
        return self.coeffs[0]

    def coefficient(self, i, j):
        if i < 0 or j < 0 or i + j > self.degree:
            raise OrderOutOfRange(f"order ({i}, {j}) exceeds jet degree {self.degree}")
        return self.coeffs[_index(self.degree)[(i, j)]]

    def diff(self, i, j):
        """True partial derivative ``d^(i+j)/ds^i dt^j`` at the base point."""
        return self.coefficient(i, j) * (math.factorial(i) * math.factorial(j))

    def __repr__(self):
        return f"Jet(degree={self.degree}, shape={self.shape})"

    # -- structural -------------------------------------------------------
    def truncate(self, degree):
        if degree > self.degree:
            raise OrderOutOfRange(f"cannot raise jet degree {self.degree} to {degree}")
        if degree == self.degree:
            return self
        return Jet(self.coeffs[: ncoef(degree)], degree, self.base)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coeffs[(slice(None),) + key], self.degree, self.base)

    def contract(self, weights):
        """Weighted sum over the last value axis."""
        return Jet(self.coeffs @ np.asarray(weights, dtype=float), self.degree, self.base)

    def d_s(self):
        return self._derivative(0)

    def d_t(self):
        return self._derivative(1)

    def _derivative(self, axis):
        if self.degree == 0:
            raise OrderOutOfRange("cannot differentiate a degree-0 jet")
        src, fac = _derivative_table(self.degree, axis)
        coeffs = self.coeffs[src] * _expand(fac, self.coeffs.ndim - 1)
        return Jet(coeffs, self.degree - 1, self.base)

    def t_only(self):
        """Drop every coefficient that involves ``s``."""
        keep = np.array([i == 0 for i, _ in monomials(self.degree)])
        coeffs = self.coeffs * _expand(keep.astype(float), self.coeffs.ndim - 1)
        return Jet(coeffs, self.degree, self.base)

    def antiderivative_t(self, value):
        """Jet of ``U`` with ``dU/dt = self`` and ``U(base) = value``.

        Only meaningful for jets that depend on ``t`` alone; the result has
        one degree more than ``self``.
        """
        deg = self.degree + 1
        idx = _index(self.degree)
        value = np.asarray(value, dtype=float)
        coeffs = np.zeros((ncoef(deg),) + np.broadcast_shapes(value.shape, self.shape))
        coeffs[0] = value
        for k, (i, j) in enumerate(monomials(deg)):
            if i == 0 and j > 0:
                coeffs[k] = self.coeffs[idx[(0, j - 1)]] / j
        return Jet(coeffs, deg, self.base)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            deg = min(self.degree, other.degree)
            a, b = self.truncate(deg), other.truncate(deg)
        else:
            a, b = self, Jet.constant(other, self.degree)
        shape = np.broadcast_shapes(a.shape, b.shape)
        return a._broadcast(shape), b._broadcast(shape)

    def _broadcast(self, shape):
        if self.shape == shape:
            return self
        n = self.coeffs.shape[0]
        padded = self.coeffs.reshape((n,) + (1,) * (len(shape) - len(self.shape)) + self.shape)
        return Jet(np.broadcast_to(padded, (n,) + shape), self.degree, self.base)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.coeffs + b.coeffs, a.degree, self.base)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.coeffs - b.coeffs, a.degree, self.base)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b.coeffs - a.coeffs, a.degree, self.base)

    def __neg__(self):
        return Jet(-self.coeffs, self.degree, self.base)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.coeffs * other, self.degree, self.base)
        a, b = self._coerce(other)
        left, right, starts = _product_table(a.degree)
        prod = a.coeffs[left] * b.coeffs[right]
        return Jet(np.add.reduceat(prod, starts, axis=0), a.degree, self.base)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise DivisionByZeroConstantTerm("division by zero constant")
            return Jet(self.coeffs / other, self.degree, self.base)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) or (isinstance(p, float) and p.is_integer() and p >= 0):
            p = int(p)
            if p < 0:
                return reciprocal(self ** (-p))
            result = Jet.constant(np.ones(self.shape), self.degree, self.base)
            base = self
            while p:
                if p & 1:
                    result = result * base
                p >>= 1
                if p:
                    base = base * base
            return result
        return power(self, float(p))


def _compose(u, taylor):
    """``F(u)`` from ``taylor[n] = F^(n)(u0) / n!`` (Horner in u - u0)."""
    delta = Jet(u.coeffs.copy(), u.degree, u.base)
    delta.coeffs[0] = 0.0
    result = Jet.constant(taylor[u.degree], u.degree, u.base)
    for n in range(u.degree - 1, -1, -1):
        result = result * delta + taylor[n]
    return result


def _binomial_taylor(x0, p, degree):
    # (x0 + d)^p = sum binom(p, n) x0^(p-n) d^n
    out, coef = [], 1.0
    for n in range(degree + 1):
        out.append(coef * x0 ** (p - n))
        coef *= (p - n) / (n + 1)
    return out


def reciprocal(u):
    if not isinstance(u, Jet):
        return 1.0 / np.asarray(u, dtype=float)
    u0 = u.value
    if np.any(u0 == 0):
        raise DivisionByZeroConstantTerm("jet division needs a nonzero constant term")
    return _compose(u, [(-1.0) ** n / u0 ** (n + 1) for n in range(u.degree + 1)])


def power(u, p):
    """``u**p`` for real ``p``; the constant term must be positive."""
    if not isinstance(u, Jet):
        return np.power(u, p)
    u0 = u.value
    if np.any(u0 <= 0):
        raise NegativeSqrtConstantTerm(f"u**{p} needs a positive constant term")
    return _compose(u, _binomial_taylor(u0, p, u.degree))


def sqrt(u):
    if not isinstance(u, Jet):
        return np.sqrt(u)
    if np.any(u.value <= 0):
        raise NegativeSqrtConstantTerm("sqrt needs a positive constant term")
    return power(u, 0.5)


def exp(u):
    if not isinstance(u, Jet):
        return np.exp(u)
    e = np.exp(u.value)
    return _compose(u, [e / math.factorial(n) for n in range(u.degree + 1)])


def log(u):
    if not isinstance(u, Jet):
        return np.log(u)
    u0 = u.value
    if np.any(u0 <= 0):
        raise NegativeSqrtConstantTerm("log needs a positive constant term")
    taylor = [np.log(u0)] + [(-1.0) ** (n + 1) / (n * u0**n) for n in range(1, u.degree + 1)]
    return _compose(u, taylor)


def _trig_taylor(u0, degree, shift):
    # derivatives of sin cycle sin, cos, -sin, -cos; cos is sin shifted by one
    cycle = [np.sin(u0), np.cos(u0), -np.sin(u0), -np.cos(u0)]
    return [cycle[(n + shift) % 4] / math.factorial(n) for n in range(degree + 1)]


def sin(u):
    if not isinstance(u, Jet):
        return np.sin(u)
    return _compose(u, _trig_taylor(u.value, u.degree, 0))


def cos(u):
    if not isinstance(u, Jet):
        return np.cos(u)
    return _compose(u, _trig_taylor(u.value, u.degree, 1))


def tan(u):
    return sin(u) / cos(u)


def sinh(u):
    return (exp(u) - exp(-u)) * 0.5


def cosh(u):
    return (exp(u) + exp(-u)) * 0.5


def variables(s, t, degree=DEFAULT_DEGREE):
    """Coordinate jets ``S, T`` expanded at the base point(s) ``(s, t)``."""
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    base = (s, t)
    S = Jet.constant(s, degree, base)
    T = Jet.constant(t, degree, base)
    if degree > 0:
        idx = _index(degree)
        S.coeffs[idx[(1, 0)]] = 1.0
        T.coeffs[idx[(0, 1)]] = 1.0
    return S, T


def as_jet(value, like):
    """Promote a constant (e.g. a ``0`` expression) to a jet shaped like ``like``."""
    if isinstance(value, Jet):
        return value
    value = np.broadcast_to(np.asarray(value, dtype=float), like.shape)
    return Jet.constant(value, like.degree, like.base)


def stack(items, like):
    """Stack scalar jets or constants along a new last axis (Vec4 assembly)."""
    jets = [as_jet(item, like) for item in items]
    degree = min(j.degree for j in jets)
    return Jet(np.stack([j.truncate(degree).coeffs for j in jets], axis=-1), degree, like.base)


def jet_extract(jet, i, k):
    """The partial derivative ``d^(i+k) f / ds^i dt^k`` carried by ``jet``."""
    return jet.diff(i, k)


# ---------------------------------------------------------------------------
# finite differences

EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def central_weights(deriv, accuracy):
    """Exact central-difference weights on offsets ``-r..r`` as floats."""
    from sympy import Rational
    from sympy.calculus.finite_diff import finite_diff_weights

    if deriv == 0:
        return (0, (1.0,))
    npts = 2 * ((deriv + 1) // 2) - 1 + accuracy
    r = npts // 2
    nodes = [Rational(k) for k in range(-r, r + 1)]
    w = finite_diff_weights(deriv, nodes, 0)[deriv][-1]
    return r, tuple(float(x) for x in w)


def default_step(s, t):
    """``eps^(1/8)`` scaled by the base point: for fourth derivatives from
    fourth-order stencils, truncation ``h^4`` and roundoff ``eps / h^4``
    balance there."""
    return EPS ** (1.0 / 8.0) * np.maximum(1.0, np.maximum(np.abs(s), np.abs(t)))


def _fd_once(sampler, s, t, h, order, degree):
    weights = {(i, j): (central_weights(i, order), central_weights(j, order))
               for i, j in monomials(degree)}
    nodes = sorted({(a, b)
                    for (ri, wi), (rj, wj) in weights.values()
                    for a in range(-ri, ri + 1) for b in range(-rj, rj + 1)})
    offs = np.array(nodes, dtype=float)
    ss = s[None] + offs[:, 0].reshape((-1,) + (1,) * s.ndim) * h[None]
    tt = t[None] + offs[:, 1].reshape((-1,) + (1,) * t.ndim) * h[None]
    try:
        vals = np.asarray(sampler(ss, tt), dtype=float)
    except (ValueError, ArithmeticError) as exc:
        raise SamplerDomainError(f"sampler rejected a stencil node: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise SamplerDomainError("sampler returned non-finite values on the stencil")
    at = {node: k for k, node in enumerate(nodes)}
    center = vals[at[(0, 0)]]
    value_ndim = vals.ndim - 1 - s.ndim
    hh = h.reshape(h.shape + (1,) * value_ndim)
    coeffs = np.zeros((ncoef(degree),) + center.shape)
    for k, (i, j) in enumerate(monomials(degree)):
        (ri, wi), (rj, wj) = weights[(i, j)]
        if i == 0 and j == 0:
            coeffs[k] = center
            continue
        acc = np.zeros_like(center)
        for a in range(-ri, ri + 1):
            for b in range(-rj, rj + 1):
                w = wi[a + ri] * wj[b + rj]
                if w:
                    acc += w * (vals[at[(a, b)]] - center)
        coeffs[k] = acc / hh ** (i + j) / (math.factorial(i) * math.factorial(j))
    return coeffs


def fd_jet(sampler, s, t, h=None, order=4, degree=DEFAULT_DEGREE, richardson=False):
    """Finite-difference jet of ``sampler`` at the base point(s) ``(s, t)``.

    ``sampler(s, t)`` must accept broadcastable arrays and return values with
    the vector axis last.  Mixed partials use tensor-product central
    stencils of accuracy ``order``; values are differenced against the
    centre sample to limit cancellation.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    h = default_step(s, t) if h is None else np.broadcast_to(np.asarray(h, dtype=float), s.shape)
    if np.any(h <= 0):
        raise ValueError("step must be positive")
    coeffs = _fd_once(sampler, s, t, h, order, degree)
    if richardson:
        fine = _fd_once(sampler, s, t, h / 2, order, degree)
        coeffs = (2.0**order * fine - coeffs) / (2.0**order - 1.0)
    return Jet(coeffs, degree, (s, t))
