"""Generators for the three classified families of quasi-minimal biconservative surfaces.

Every generator returns a :class:`GeneratedSurface`: an analytic jet
function of the immersion plus provenance and a validation report.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets as J
from .errors import (
    BranchAmbiguity, CurveConstraintViolation, DegenerateH, InconsistentConstraints,
    IsometryViolation, LNotFunctionOfT, NoRealRoot, RankDeficiency, SpecError, VanishingCurvature,
)
from .expressions import compile_scalar, compile_vector
from .geometry import TAU_ISO, TAU_K, SemiGeodesicMetric, invariant_L_jet
from .linalg import SIGNATURE, inner4, lightcone_member, scale

TAU_CONSTRAINT = 1e-9
TAU_RANK = 1e-8
TAU_L = 1e-7
VALIDATION_GRID = 41
BRANCHES = ("small", "large", "strict")


class Surface:
    """A parametrized surface patch: jets and point samples of ``f(s, t)``."""

    def __init__(self, jet_fn, domain, metric=None, name=None):
        self._jet_fn = jet_fn
        self.domain = tuple(float(x) for x in domain)
        self.metric = metric
        self.name = name

    def jet(self, s, t, degree=J.DEFAULT_DEGREE):
        return self._jet_fn(s, t, degree)

    def position(self, s, t):
        return self.jet(s, t, 0).value


class GeneratedSurface(Surface):
    def __init__(self, jet_fn, domain, metric, name, family, spec_hash, validation=None, info=None):
        super().__init__(jet_fn, domain, metric, name)
        self.family = family
        self.spec_hash = spec_hash
        self.validation = validation
        self.info = dict(info or {})


def _check_domain(domain):
    try:
        s0, s1, t0, t1 = (float(x) for x in domain)
    except (TypeError, ValueError) as exc:
        raise SpecError("domain: expected [s0, s1, t0, t1]") from exc
    if not (s1 > s0 and t1 > t0):
        raise SpecError(f"domain: degenerate rectangle {list(domain)}")
    return (s0, s1, t0, t1)


def _grid(domain, n=VALIDATION_GRID):
    s0, s1, t0, t1 = domain
    S, T = np.meshgrid(np.linspace(s0, s1, n), np.linspace(t0, t1, n), indexing="ij")
    return S.ravel(), T.ravel()


def _spec_hash(spec):
    text = json.dumps(spec, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# spec types


@dataclass(frozen=True)
class FamilyISpec:
    psi: Callable
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    name: str | None = None
    source: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FamilyIISpec:
    z: Callable
    w: Callable
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    name: str | None = None
    source: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FamilyIIISpec:
    m: Callable
    alpha: Callable
    a: Callable
    mu: Callable = lambda s, t: 0.0
    branch: str = "small"
    eta0: tuple = (0.0, 0.0, 0.0, 0.0)
    t0: float | None = None
    quad_step: float | None = None
    domain: tuple = (-1.0, 1.0, 0.0, 1.0)
    name: str | None = None
    source: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GenericSpec:
    surface: Callable
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    name: str | None = None
    source: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# family (i): f = (psi, (s - t)/sqrt 2, (s + t)/sqrt 2, psi)


def _family_i_jet(psi):
    r = 1.0 / np.sqrt(2.0)

    def jet_fn(s, t, degree=J.DEFAULT_DEGREE):
        S, T = J.variables(s, t, degree)
        p = J.as_jet(psi(S, T), S)
        return J.stack([p, (S - T) * r, (S + T) * r, p], S)

    return jet_fn


def generate_family_i(spec, delta=1e-6):
    """Flat family with metric ``g_0``; requires ``psi_st != 0`` so that ``H != 0``."""
    domain = _check_domain(spec.domain)
    jet_fn = _family_i_jet(spec.psi)
    s, t = _grid(domain)
    S, T = J.variables(s, t, 2)
    psi_st = J.as_jet(spec.psi(S, T), S).diff(1, 1)
    floor = delta * max(1.0, float(np.max(np.abs(psi_st))))
    if np.min(np.abs(psi_st)) <= floor:
        k = int(np.argmin(np.abs(psi_st)))
        raise DegenerateH(f"psi_st vanishes at (s, t) = ({s[k]:.4g}, {t[k]:.4g}); H would be zero")
    metric = SemiGeodesicMetric(lambda s, t: 0.0 * s)
    surface = GeneratedSurface(jet_fn, domain, metric, spec.name, "i", _spec_hash(spec.source))
    return _validate(surface)


# ---------------------------------------------------------------------------
# family (ii): f = z(s) t + w(s)


def _family_ii_jet(z, w):
    def jet_fn(s, t, degree=J.DEFAULT_DEGREE):
        S, T = J.variables(s, t, degree)
        return J.as_jet(z(S, T), S) * T[..., None] + J.as_jet(w(S, T), S)

    return jet_fn


def curve_defects_ii(z, w, s):
    """The five constraint defects of a family (ii) curve pair, sampled at ``s``."""
    S, T = J.variables(s, np.zeros_like(s), 1)
    zj, wj = J.as_jet(z(S, T), S), J.as_jet(w(S, T), S)
    z0, z1, w1 = zj.value, zj.diff(1, 0), wj.diff(1, 0)
    return {
        "<z,z> = 0": inner4(z0, z0),
        "<z',z'> = 0": inner4(z1, z1),
        "<w',w'> = 0": inner4(w1, w1),
        "<z',w'> = 0": inner4(z1, w1),
        "<z,w'> = -1": inner4(z0, w1) + 1.0,
    }


def generate_family_ii(spec, tau=TAU_CONSTRAINT):
    domain = _check_domain(spec.domain)
    s = np.linspace(domain[0], domain[1], 4 * VALIDATION_GRID + 1)
    for condition, defect in curve_defects_ii(spec.z, spec.w, s).items():
        worst = float(np.max(np.abs(defect)))
        if worst > tau:
            raise CurveConstraintViolation(condition, worst)
    metric = SemiGeodesicMetric(lambda s, t: 0.0 * s)
    surface = GeneratedSurface(_family_ii_jet(spec.z, spec.w), domain, metric, spec.name, "ii",
                               _spec_hash(spec.source))
    return _validate(surface)


# ---------------------------------------------------------------------------
# family (iii): the non-flat construction from (m, alpha, a)


def solve_eta_prime(alpha, alpha_p, a, mu=0.0, branch="small", tau=TAU_RANK):
    """Null ``eta'`` with ``<alpha, eta'> = 0`` and ``<alpha', eta'> = -1/a``.

    Works on arrays (vector axis last) and on jets.  The two linear
    conditions are solved in the minimum-norm sense, giving ``p``; the
    remaining freedom is the plane ``N`` on which both conditions vanish.
    With ``u``, ``w`` the Euclidean projections of ``alpha``, ``alpha'``
    onto ``N`` we take ``eta' = p + mu u + nu w``: ``mu`` is free and
    ``nu`` solves the null condition.  For a null curve ``u = alpha`` and
    ``w = alpha'``; the condition is then linear in ``nu`` when ``alpha'``
    is null and quadratic otherwise, where ``branch`` picks the root.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    val = lambda x: x.value if isinstance(x, J.Jet) else np.asarray(x, dtype=float)
    if np.any(val(a) <= 0):
        raise CurveConstraintViolation("a > 0", float(np.min(val(a))))
    r1, r2 = alpha * SIGNATURE, alpha_p * SIGNATURE
    g11, g12, g22 = _edot(r1, r1), _edot(r1, r2), _edot(r2, r2)
    det = g11 * g22 - g12 * g12
    rel = val(det) / np.maximum(val(g11) * val(g22), 1e-300)
    if np.any(rel <= tau):
        raise RankDeficiency("span{alpha, alpha'} is not two-dimensional")

    def lift(b1, b2):
        # the combination of r1, r2 whose products with alpha, alpha' are b1, b2
        return r1 * _v((g22 * b1 - g12 * b2) / det) + r2 * _v((g11 * b2 - g12 * b1) / det)

    p = lift(0.0 * a, -1.0 / a)
    u = alpha - lift(inner4(alpha, alpha), inner4(alpha_p, alpha))
    w = alpha_p - lift(inner4(alpha, alpha_p), inner4(alpha_p, alpha_p))
    # null condition: A nu^2 + B nu + C = 0
    A = inner4(w, w)
    B = 2.0 * (inner4(p, w) + inner4(u, w) * mu)
    C = inner4(p, p) + 2.0 * inner4(p, u) * mu + inner4(u, u) * (mu * mu)
    ref = np.maximum(1.0, np.abs(val(B)) + np.abs(val(C)))
    linear = np.abs(val(A)) <= tau * ref
    if np.all(linear):
        if np.any(np.abs(val(B)) <= tau * ref):
            raise NoRealRoot("null condition on eta' is degenerate")
        nu = -C / B
    else:
        if not np.all(~linear):
            raise BranchAmbiguity("null condition changes between linear and quadratic on the range")
        disc = B * B - 4.0 * A * C
        if np.any(val(disc) < 0):
            raise NoRealRoot("null condition on eta' has no real root")
        root = J.sqrt(disc)
        lo, hi = (-B - root) / (2.0 * A), (-B + root) / (2.0 * A)
        if branch == "strict" and np.any(np.abs(val(root)) <= tau * ref):
            raise BranchAmbiguity("both roots of the null condition coincide")
        pick_lo = np.abs(val(lo)) <= np.abs(val(hi))
        if branch == "large":
            pick_lo = ~pick_lo
        nu = _where(pick_lo, lo, hi)
    return p + u * _v(mu) + w * _v(nu)


def _edot(x, y):
    prod = x * y
    return prod.contract(np.ones(4)) if isinstance(prod, J.Jet) else np.sum(prod, axis=-1)


def _v(x):
    return x[..., None] if isinstance(x, J.Jet) else np.asarray(x, dtype=float)[..., None]


def _where(mask, x, y):
    if isinstance(x, J.Jet):
        m = np.broadcast_to(mask, x.shape)
        return J.Jet(np.where(m, x.coeffs, y.coeffs), x.degree, x.base)
    return np.where(mask, x, y)


class _EtaQuadrature:
    """Positions ``eta(t) = eta0 + int_{t0}^t eta'`` by fixed-step RK4.

    The right-hand side depends on ``t`` only, so each RK4 step is
    Simpson's rule.  All queries share one lattice ``t0 + k h``; the last
    partial step is taken from the nearest lattice node towards ``t0``.
    """

    def __init__(self, eta_prime, t0, eta0, step):
        self.eta_prime = eta_prime
        self.t0 = float(t0)
        self.eta0 = np.asarray(eta0, dtype=float)
        self.h = float(step)
        self._cache = {}

    def _nodes(self, k_max, direction):
        key = direction
        have = self._cache.get(key)
        if have is not None and len(have) > k_max:
            return have
        n = max(k_max, 16)
        t = self.t0 + direction * self.h * np.arange(n + 1)
        mid = t[:-1] + direction * self.h / 2
        fa, fm, fb = self.eta_prime(t[:-1]), self.eta_prime(mid), self.eta_prime(t[1:])
        steps = direction * self.h / 6.0 * (fa + 4.0 * fm + fb)
        nodes = self.eta0 + np.concatenate([np.zeros((1, 4)), np.cumsum(steps, axis=0)])
        self._cache[key] = nodes
        return nodes

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty(flat.shape + (4,))
        for direction in (1.0, -1.0):
            sel = (flat - self.t0) * direction >= 0 if direction > 0 else flat < self.t0
            if not np.any(sel):
                continue
            dist = (flat[sel] - self.t0) * direction
            k = np.floor(dist / self.h).astype(int)
            nodes = self._nodes(int(k.max()) + 1, direction)
            ta = self.t0 + direction * self.h * k
            rem = flat[sel] - ta
            fa, fm, fb = (self.eta_prime(x) for x in (ta, ta + rem / 2, flat[sel]))
            out[sel] = nodes[k] + rem[:, None] / 6.0 * (fa + 4.0 * fm + fb)
        return out.reshape(t.shape + (4,))


def _family_iii_parts(spec, s_ref):
    """Closures for the curve data of a family (iii) spec."""

    def curves(t, degree):
        # jets in t alone; two extra orders so alpha'' and a' keep ``degree``
        _, T = J.variables(np.zeros_like(t), t, degree + 2)
        A = J.as_jet(spec.alpha(T * 0.0, T), T)
        a = J.as_jet(spec.a(T * 0.0, T), T)
        mu = J.as_jet(spec.mu(T * 0.0, T), T)
        return A, a, mu

    def eta_prime_jet(t, degree):
        A, a, mu = curves(t, degree)
        return solve_eta_prime(A, A.d_t(), a, mu, spec.branch)

    def eta_prime_values(t):
        return eta_prime_jet(np.asarray(t, dtype=float), 0).value

    def L_jet(t, degree):
        s = np.full_like(t, s_ref)
        return invariant_L_jet(spec.m, s, t, degree).t_only()

    return curves, eta_prime_jet, eta_prime_values, L_jet


def _rebase(jet, base):
    return J.Jet(jet.coeffs, jet.degree, base)


def generate_family_iii(spec, tau_iso=TAU_ISO, tau_L=TAU_L, tau=TAU_CONSTRAINT):
    """Assemble ``f = eta + (s a' - a (m + s L)) alpha + s a alpha'`` and validate it."""
    domain = _check_domain(spec.domain)
    s0, s1, t0, t1 = domain
    s_ref = 0.5 * (s0 + s1)
    metric = SemiGeodesicMetric(spec.m)
    s, t = _grid(domain)

    # intrinsic gate: K != 0 and L = L(t)
    K = metric.jet(s, t, 2).diff(2, 0)
    if np.min(np.abs(K)) <= TAU_K:
        raise VanishingCurvature("K = m_ss vanishes on the domain; L is undefined")
    L = invariant_L_jet(spec.m, s, t, 1)
    dL = float(np.max(np.abs(L.diff(1, 0))))
    if dL > tau_L * max(1.0, float(np.max(np.abs(L.value)))):
        raise LNotFunctionOfT(dL)

    curves, eta_prime_jet, eta_prime_values, L_jet = _family_iii_parts(spec, s_ref)

    # curve conditions on a fine t-sampling
    tt = np.linspace(t0, t1, 4 * VALIDATION_GRID + 1)
    A, a, _ = curves(tt, 2)
    Av, A1, A2 = A.value, A.diff(0, 1), A.diff(0, 2)
    bad = [k for k, x in enumerate(Av) if not lightcone_member(x, tau)]
    if bad:
        raise CurveConstraintViolation("<alpha,alpha> = 0", float(np.max(np.abs(inner4(Av, Av)))))
    q = np.abs(inner4(A1, A1)) / np.maximum(scale(A1) ** 2, 1e-300)
    if np.max(q) > tau:
        # alpha' must be null for f_s to be null
        raise CurveConstraintViolation("<alpha',alpha'> = 0", float(np.max(q)))
    if np.any(a.value <= 0):
        raise CurveConstraintViolation("a > 0", float(np.min(a.value)))
    ep = eta_prime_jet(tt, 0).value
    Lt = L_jet(tt, 0).value
    target = (2.0 * a.diff(0, 1) - a.value * Lt) / a.value**2
    defect = np.abs(inner4(ep, A2) - target)
    if np.max(defect) > tau * max(1.0, float(np.max(np.abs(target)))) * 1e3:
        raise InconsistentConstraints(
            f"<eta',alpha''> = (2a' - aL)/a^2 cannot hold: it is fixed by the other conditions "
            f"(max defect {np.max(defect):.3e})")
    decomposition = _alpha_decomposition(Av, A1, A2, a.value, a.diff(0, 1), Lt)

    t_start = t0 if spec.t0 is None else float(spec.t0)
    step = spec.quad_step or (t1 - t0) / 2048.0
    if step <= 0:
        raise SpecError("quad_step: must be positive")
    eta = _EtaQuadrature(eta_prime_values, t_start, spec.eta0, step)

    def jet_fn(s, t, degree=J.DEFAULT_DEGREE):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        S, T = J.variables(s, t, degree)
        base = S.base
        A, a, _ = curves(t, degree)
        A, a = _rebase(A, base), _rebase(a, base)
        Ap, ap = A.d_t(), a.d_t()
        Lj = _rebase(L_jet(t, degree), base)
        m = J.as_jet(spec.m(S, T), S)
        etap = _rebase(eta_prime_jet(t, degree), base)
        eta_j = etap.antiderivative_t(eta(t))
        coef = S * ap - a * (m + S * Lj)
        f = eta_j + A * coef[..., None] + Ap * (S * a)[..., None]
        return f.truncate(degree)

    info = {"alpha_decomposition_residual": decomposition, "s_ref": s_ref, "quad_step": step}
    surface = GeneratedSurface(jet_fn, domain, metric, spec.name, "iii",
                               _spec_hash(spec.source), info=info)
    surface = _validate(surface, tau_iso)
    # informational: e3 = B(t) alpha along the patch
    from .geometry import local_geometry

    lg = local_geometry(surface.jet(s, t), metric)
    e3 = lg.frame.e3.value
    Aval = curves(t, 0)[0].value
    B = np.sum(e3 * Aval, axis=-1) / np.sum(Aval * Aval, axis=-1)
    surface.info["B"] = {"min": float(np.min(B)), "max": float(np.max(B)),
                         "off_line": float(np.max(scale(e3 - B[:, None] * Aval)))}
    return surface


def _alpha_decomposition(A, A1, A2, a, ap, L):
    """Residual of ``alpha'' = A alpha + ((a L - 2 a')/a) alpha'`` after fitting ``A``."""
    rhs = A2 - ((a * L - 2.0 * ap) / a)[:, None] * A1
    coef = np.sum(rhs * A, axis=-1) / np.sum(A * A, axis=-1)
    return float(np.max(scale(rhs - coef[:, None] * A)))


# ---------------------------------------------------------------------------
# generic patches (no metric supplied; used as controls)


def generic_surface(spec):
    domain = _check_domain(spec.domain)
    fn = spec.surface

    def jet_fn(s, t, degree=J.DEFAULT_DEGREE):
        S, T = J.variables(s, t, degree)
        return J.as_jet(fn(S, T), S)

    return GeneratedSurface(jet_fn, domain, None, spec.name, "generic", _spec_hash(spec.source))


def _validate(surface, tau_iso=TAU_ISO):
    """Attach the grid residual report; isometry defects are fatal."""
    from .residuals import evaluate

    report = evaluate(surface, VALIDATION_GRID, VALIDATION_GRID)
    iso = report.max("isometry")
    if iso > tau_iso:
        raise IsometryViolation(f"induced metric differs from g_m by {iso:.3e}", iso)
    surface.validation = report
    return surface


# ---------------------------------------------------------------------------
# JSON specs and built-in instances


def _require(data, key, family):
    if key not in data:
        raise SpecError(f"{key}: missing field for family {family!r}")
    return data[key]


def parse_family_spec(data):
    """Build a spec object from its JSON form."""
    if not isinstance(data, dict):
        raise SpecError("spec: expected a JSON object")
    family = data.get("family")
    name = data.get("name")
    known = {
        "i": {"family", "name", "domain", "psi"},
        "ii": {"family", "name", "domain", "z", "w"},
        "iii": {"family", "name", "domain", "m", "alpha", "a", "mu", "branch", "eta0", "t0",
                "quad_step"},
        "generic": {"family", "name", "domain", "surface"},
    }
    if family not in known:
        raise SpecError(f"family: expected one of {sorted(known)}, got {family!r}")
    extra = set(data) - known[family]
    if extra:
        raise SpecError(f"{sorted(extra)[0]}: unknown field for family {family!r}")
    default_domain = [-1, 1, 0, 1] if family == "iii" else [-1, 1, -1, 1]
    domain = _check_domain(data.get("domain", default_domain))
    if family == "i":
        return FamilyISpec(compile_scalar(_require(data, "psi", family), "psi"), domain, name, data)
    if family == "ii":
        z = compile_vector(_require(data, "z", family), "z", ("s",))
        w = compile_vector(_require(data, "w", family), "w", ("s",))
        return FamilyIISpec(z, w, domain, name, data)
    if family == "generic":
        return GenericSpec(compile_vector(_require(data, "surface", family), "surface"), domain,
                           name, data)
    eta0 = data.get("eta0", [0, 0, 0, 0])
    if not (isinstance(eta0, list) and len(eta0) == 4):
        raise SpecError("eta0: expected a list of 4 numbers")
    branch = data.get("branch", "small")
    if branch not in BRANCHES:
        raise SpecError(f"branch: expected one of {BRANCHES}")
    return FamilyIIISpec(
        m=compile_scalar(_require(data, "m", family), "m"),
        alpha=compile_vector(_require(data, "alpha", family), "alpha", ("t",)),
        a=compile_scalar(_require(data, "a", family), "a", ("t",)),
        mu=compile_scalar(data.get("mu", "0"), "mu", ("t",)),
        branch=branch,
        eta0=tuple(float(x) for x in eta0),
        t0=data.get("t0"),
        quad_step=data.get("quad_step"),
        domain=domain,
        name=name,
        source=data,
    )


def generate(spec):
    """Dispatch a parsed spec to its generator."""
    if isinstance(spec, dict):
        spec = parse_family_spec(spec)
    if isinstance(spec, FamilyISpec):
        return generate_family_i(spec)
    if isinstance(spec, FamilyIISpec):
        return generate_family_ii(spec)
    if isinstance(spec, FamilyIIISpec):
        return generate_family_iii(spec)
    if isinstance(spec, GenericSpec):
        return generic_surface(spec)
    raise TypeError(f"not a family spec: {spec!r}")


BUILTINS = {
    "i-st": {"family": "i", "name": "i-st", "psi": "s*t", "domain": [-1, 1, -1, 1]},
    "i-exp": {"family": "i", "name": "i-exp", "psi": "exp(s + t)", "domain": [-1, 1, -1, 1]},
    "ii-trig": {
        "family": "ii", "name": "ii-trig",
        "z": ["cos(s)", "sin(s)", "cos(s)", "sin(s)"],
        "w": ["-sin(s)/2", "cos(s)/2", "sin(s)/2", "-cos(s)/2"],
        "domain": [-1, 1, -1, 1],
    },
    "iii-I3": {
        "family": "iii", "name": "iii-I3",
        "m": "exp(-t)*sqrt(s^2 + 1)",
        "alpha": ["cos(t)", "sin(t)", "cos(t)", "sin(t)"],
        "a": "exp(t/2)", "mu": "0", "eta0": [0, 0, 0, 0],
        "domain": [-1, 1, 0, 1],
    },
    "generic": {
        "family": "generic", "name": "generic",
        "surface": ["s", "t", "s^2 + t^2", "s*t"],
        "domain": [0.6, 0.85, -0.2, 0.2],
    },
}

_builtin_cache = {}


def builtin(name):
    """Generated surface for a named preset (cached; surfaces are immutable)."""
    if name not in BUILTINS:
        raise SpecError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    if name not in _builtin_cache:
        _builtin_cache[name] = generate(BUILTINS[name])
    return _builtin_cache[name]
