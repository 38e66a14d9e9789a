"""Numerical residuals of the defining equations, and grid-level verdicts.

All vector-valued defects are measured with the auxiliary Euclidean norm:
a null defect vector is still a defect.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import IncompleteGrid, KernelPatternViolation, VanishingCurvature
from .geometry import TAU_K, _L_from_jet, _vec, frame_scalars, isometry_residual
from .linalg import inner4, scale

RESIDUAL_NAMES = (
    "isometry", "quasiminimal_null", "quasiminimal_nonzero", "biconservative",
    "biconservative_frame", "biharmonic", "gauss", "codazzi", "ricci", "h3_11", "xi1",
)


def _check_c(c):
    if c not in (-1, 0, 1):
        raise ValueError(f"ambient curvature must be -1, 0 or 1, got {c}")
    return float(c)


def shape_operator(lg, xi, i):
    """``A_xi(d_i)`` as an ambient (tangent) vector jet."""
    gi = lg.metric.ginv
    coef = [inner4(lg.alpha[i][j], xi) for j in range(2)]
    c1 = coef[0] * gi[0][0] + coef[1] * gi[1][0]
    c2 = coef[0] * gi[0][1] + coef[1] * gi[1][1]
    return lg.coord_vector((c1, c2))


def ambient_curvature_trace(lg, c):
    """``trace R~(., H).`` for the space form of curvature ``c``, split (T, perp).

    ``R~(X,Y)Z = c(<Y,Z> X - <X,Z> Y)``.  For ``c = 0`` both parts are
    computed and must vanish identically.
    """
    gi = lg.metric.ginv
    tang = lg.tangents
    H = lg.H
    total = None
    for i in range(2):
        for j in range(2):
            term = _vec(inner4(H, tang[j])) * tang[i] - _vec(inner4(tang[i], tang[j])) * H
            term = _vec(gi[i][j]) * term
            total = term if total is None else total + term
    total = total * c
    return lg.tangential(total), lg.normal(total)


def nabla_perp_H(lg):
    return (lg.normal_derivative(lg.H, 0), lg.normal_derivative(lg.H, 1))


def biconservative_vector(lg, c=0):
    """Tangential part of the bitension field: ``2 grad<H,H> + 4 tr A_{nabla H} + 4 tr R~^T``."""
    c = _check_c(c)
    gi = lg.metric.ginv
    HH = inner4(lg.H, lg.H)
    dHH = (HH.d_s(), HH.d_t())
    grad = lg.coord_vector((gi[0][0] * dHH[0] + gi[0][1] * dHH[1],
                            gi[1][0] * dHH[0] + gi[1][1] * dHH[1]))
    nH = nabla_perp_H(lg)
    trA = None
    for i in range(2):
        for j in range(2):
            term = _vec(gi[i][j]) * shape_operator(lg, nH[i], j)
            trA = term if trA is None else trA + term
    curv_T, _ = ambient_curvature_trace(lg, c)
    if c == 0.0:
        assert not np.any(curv_T.value), "flat ambient must give a vanishing curvature trace"
    return grad * 2.0 + trA * 4.0 + curv_T * 4.0


def biconservative_residual(lg, c=0):
    return scale(biconservative_vector(lg, c).value)


def biconservative_frame_assembly(lg, scalars=None):
    """``-4 (xi1 h3_22 e1 + xi2 h3_11 e2)``: the frame form of the same condition.

    On quasi-minimal patches (where ``grad<H,H> = 0``) this equals the
    tangential bitension assembled in coordinates.
    """
    sc = scalars if scalars is not None else frame_scalars(lg)
    fr = lg.frame
    v = (_vec(sc["xi1"].value * sc["h3_22"].value) * fr.e1.value
         + _vec(sc["xi2"].value * sc["h3_11"].value) * fr.e2.value)
    return scale(-4.0 * v)


def normal_laplacian(lg, field):
    """``Delta^perp field = g^ij (nabla_i nabla_j - nabla_{nabla_i d_j}) field``.

    The sign is the one for which the biharmonic equation reads
    ``tr alpha(A_H ., .) - Delta^perp H = 0``; with the opposite sign the
    bitension of a surface with ``Delta_g H = 0`` would not vanish.
    """
    gi, gam = lg.metric.ginv, lg.metric.gamma
    first = (lg.normal_derivative(field, 0), lg.normal_derivative(field, 1))
    total = None
    for i in range(2):
        for j in range(2):
            hess = lg.normal_derivative(first[j], i)
            hess = hess - _vec(gam[0][i][j]) * first[0] - _vec(gam[1][i][j]) * first[1]
            term = _vec(gi[i][j]) * hess
            total = term if total is None else total + term
    return total


def biharmonic_vector(lg, c=0):
    """Normal part of the bitension field: ``tr alpha(A_H ., .) - Delta^perp H + 2 tr R~^perp``."""
    c = _check_c(c)
    gi = lg.metric.ginv
    a = lg.alpha
    H = lg.H
    # A_H d_i = sum_k w[i][k] d_k
    w = [[inner4(a[i][0], H) * gi[0][k] + inner4(a[i][1], H) * gi[1][k] for k in range(2)]
         for i in range(2)]
    tr = None
    for i in range(2):
        for j in range(2):
            aij = _vec(w[i][0]) * a[0][j] + _vec(w[i][1]) * a[1][j]
            term = _vec(gi[i][j]) * aij
            tr = term if tr is None else tr + term
    _, curv_N = ambient_curvature_trace(lg, c)
    if c == 0.0:
        assert not np.any(curv_N.value), "flat ambient must give a vanishing curvature trace"
    return tr - normal_laplacian(lg, H) + curv_N * 2.0


def biharmonic_residual(lg, c=0):
    return scale(biharmonic_vector(lg, c).value)


def _normal_basis(lg):
    if lg.frame is not None:
        return [lg.frame.e3, lg.frame.e4]
    return [lg.normal(_const_basis(lg, k)) for k in range(4)]


def _const_basis(lg, k):
    from .jets import Jet

    e = np.zeros(4)
    e[k] = 1.0
    v = np.broadcast_to(e, lg.f.shape)
    return Jet.constant(v, lg.f.degree - 1, lg.f.base)


def integrability_residuals(lg, c=0):
    """Residuals of the Gauss, Codazzi and Ricci equations on ``{d_s, d_t}``.

    The intrinsic side (curvature, connection) comes from the metric in
    ``lg``; the extrinsic side from the immersion's jets.
    """
    c = _check_c(c)
    md = lg.metric
    g, gam = md.g, md.gamma
    a = lg.alpha
    R = md.riemann()
    gauss = 0.0
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    ext = (c * (g[j][k].value * g[i][l].value - g[i][k].value * g[j][l].value)
                           + inner4(a[j][k].value, a[i][l].value)
                           - inner4(a[i][k].value, a[j][l].value))
                    gauss = np.maximum(gauss, np.abs(R[i][j][k][l].value - ext))

    def cov_alpha(i, j, k):
        # (nabla-bar_i alpha)(d_j, d_k)
        v = lg.normal_derivative(a[j][k], i)
        for l in range(2):
            v = v - _vec(gam[l][i][j]) * a[l][k] - _vec(gam[l][i][k]) * a[j][l]
        return v.value

    codazzi = 0.0
    for k in range(2):
        codazzi = np.maximum(codazzi, scale(cov_alpha(0, 1, k) - cov_alpha(1, 0, k)))

    ricci = 0.0
    for xi in _normal_basis(lg):
        lhs = (lg.normal_derivative(lg.normal_derivative(xi, 1), 0)
               - lg.normal_derivative(lg.normal_derivative(xi, 0), 1))
        A_t = _shape_coeffs(lg, xi, 1)
        A_s = _shape_coeffs(lg, xi, 0)
        rhs = (_vec(A_t[0]) * a[0][0] + _vec(A_t[1]) * a[0][1]
               - _vec(A_s[0]) * a[0][1] - _vec(A_s[1]) * a[1][1])
        ricci = np.maximum(ricci, scale(lhs.value - rhs.value))
    return gauss, codazzi, ricci


def _shape_coeffs(lg, xi, i):
    gi = lg.metric.ginv
    coef = [inner4(lg.alpha[i][j], xi) for j in range(2)]
    return (coef[0] * gi[0][0] + coef[1] * gi[1][0], coef[0] * gi[0][1] + coef[1] * gi[1][1])


def normal_curvature(lg, xi):
    """``R^perp(d_s, d_t) xi`` at the base points."""
    return (lg.normal_derivative(lg.normal_derivative(xi, 1), 0)
            - lg.normal_derivative(lg.normal_derivative(xi, 0), 1)).value


# ---------------------------------------------------------------------------
# grid reports


@dataclass
class Tolerances:
    isometry: float = 1e-7
    null: float = 1e-8
    delta: float = 1e-6  # relative to the grid jet scale
    biconservative: float = 1e-8
    biharmonic: float = 1e-6
    integrability: float = 1e-7
    flat: float = 1e-9
    kernel: float = 1e-7

    @classmethod
    def for_fd(cls):
        return cls(isometry=1e-4, null=1e-4, biconservative=1e-4, biharmonic=1e-3,
                   integrability=1e-4, flat=1e-9, kernel=1e-4)

    def scaled(self, factor):
        return replace(self, **{k: v * factor for k, v in asdict(self).items()})


VERDICT_NAMES = ("quasi_minimal", "biconservative", "proper", "biharmonic", "flat")


@dataclass
class ResidualReport:
    """Per-point residuals and values on an ``ns x nt`` grid (s varies slowest)."""

    grid_shape: tuple
    s: np.ndarray
    t: np.ndarray
    residuals: dict
    values: dict
    tolerances: Tolerances = field(default_factory=Tolerances)
    metadata: dict = field(default_factory=dict)

    @property
    def jet_scale(self):
        return float(self.metadata.get("jet_scale", 1.0))

    def aggregates(self):
        out = {}
        for name, arr in self.residuals.items():
            arr = np.asarray(arr, dtype=float)
            if np.all(np.isnan(arr)):
                out[name] = {"max": None, "mean": None}
            else:
                out[name] = {"max": float(np.nanmax(arr)), "mean": float(np.nanmean(arr))}
        return out

    def max(self, name):
        return float(np.nanmax(self.residuals[name]))

    def grid(self, name):
        if name in ("s", "t"):
            return getattr(self, name).reshape(self.grid_shape)
        src = self.residuals if name in self.residuals else self.values
        return np.asarray(src[name]).reshape(self.grid_shape + np.shape(src[name])[1:])

    def verdicts(self, tolerances=None):
        return classify(self, tolerances or self.tolerances)

    def to_dict(self):
        def arr(x):
            x = np.asarray(x, dtype=float)
            return [None if not math.isfinite(v) else v for v in x.ravel().tolist()] if x.ndim == 1 \
                else [[None if not math.isfinite(v) else v for v in row] for row in x.tolist()]

        return {
            "metadata": self.metadata,
            "grid": {"shape": list(self.grid_shape), "s": arr(self.s), "t": arr(self.t)},
            "tolerances": asdict(self.tolerances),
            "residuals": {k: arr(v) for k, v in self.residuals.items()},
            "values": {k: arr(v) for k, v in self.values.items()},
            "aggregates": self.aggregates(),
            "verdicts": self.verdicts(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        def arr(x):
            return np.array([[np.nan if v is None else v for v in row] for row in x], dtype=float) \
                if x and isinstance(x[0], list) else np.array([np.nan if v is None else v for v in x],
                                                              dtype=float)

        return cls(
            grid_shape=tuple(data["grid"]["shape"]),
            s=arr(data["grid"]["s"]), t=arr(data["grid"]["t"]),
            residuals={k: arr(v) for k, v in data["residuals"].items()},
            values={k: arr(v) for k, v in data["values"].items()},
            tolerances=Tolerances(**data["tolerances"]),
            metadata=data.get("metadata", {}),
        )


def classify(report, tolerances=None):
    """Verdicts from grid residuals; every verdict is a pure function of the table."""
    tol = tolerances or report.tolerances
    n = int(np.prod(report.grid_shape))
    needed = ("quasiminimal_null", "quasiminimal_nonzero", "biconservative", "biharmonic")
    for name in needed:
        arr = np.asarray(report.residuals.get(name, []), dtype=float)
        if arr.shape != (n,) or np.any(np.isnan(arr)):
            raise IncompleteGrid(f"residual {name!r} missing or incomplete on the grid")
    for name in ("K", "nabla_perp_H"):
        arr = np.asarray(report.values.get(name, []), dtype=float)
        if arr.shape != (n,) or np.any(np.isnan(arr)):
            raise IncompleteGrid(f"value {name!r} missing or incomplete on the grid")
    r, v = report.residuals, report.values
    delta = tol.delta * report.jet_scale
    quasi = bool(np.max(r["quasiminimal_null"]) <= tol.null and np.min(r["quasiminimal_nonzero"]) >= delta)
    bicons = bool(np.max(r["biconservative"]) <= tol.biconservative)
    proper = bool(bicons and np.min(v["nabla_perp_H"]) >= delta)
    biharm = bool(bicons and np.max(r["biharmonic"]) <= tol.biharmonic)
    flat = bool(np.max(np.abs(v["K"])) <= tol.flat)
    return {"quasi_minimal": quasi, "biconservative": bicons, "proper": proper,
            "biharmonic": biharm, "flat": flat}


@dataclass(frozen=True)
class Lemma4Result:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    z: np.ndarray
    L: np.ndarray
    da: np.ndarray
    residual_s_independence: float
    residual_bpL: float


def _uniform_derivative(y, h):
    """First derivative of uniformly sampled data, 4th-order accurate everywhere."""
    from sympy import Rational
    from sympy.calculus.finite_diff import finite_diff_weights

    n = len(y)
    if n < 5:
        raise ValueError("need at least 5 samples along t")
    out = np.empty(n)
    for k in range(n):
        lo = min(max(k - 2, 0), n - 5)
        nodes = [Rational(q - k) for q in range(lo, lo + 5)]
        w = [float(x) for x in finite_diff_weights(1, nodes, 0)[1][-1]]
        out[k] = np.dot(w, y[lo:lo + 5]) / h
    return out


def lemma4_extract(report, tolerances=None):
    """Recover ``a(t), b(t), z(t)`` along t-lines and check ``b + a'/a = L``.

    Uses ``a = 1/h3_22``, ``b = xi2 - m_s`` and ``z = h4_22 + m + b s``.
    """
    tol = tolerances or report.tolerances
    r, v = report.residuals, report.values
    for name in ("h3_11", "xi1"):
        arr = np.asarray(r[name], dtype=float)
        if np.any(np.isnan(arr)):
            raise KernelPatternViolation(f"{name} unavailable (no null frame)")
    if np.any(np.abs(np.asarray(v["K"])) <= TAU_K):
        raise VanishingCurvature("lemma-4 extraction needs non-vanishing curvature")
    worst = max(np.max(r["h3_11"]), np.max(r["xi1"]))
    if worst > tol.kernel:
        raise KernelPatternViolation(f"h3_11/xi1 pattern violated (max {worst:.3e})")
    g = report.grid
    a = 1.0 / g("h3_22")
    b = g("xi2") - g("m_s")
    z = g("h4_22") + g("m") + b * g("s")
    Lg = g("L")
    tt = g("t")[0]
    spread = max(float(np.max(np.ptp(x, axis=0))) for x in (a, b, z))
    a_t, b_t, L_t = a.mean(axis=0), b.mean(axis=0), Lg.mean(axis=0)
    h = float(tt[1] - tt[0])
    da = _uniform_derivative(a_t, h)
    bpl = float(np.max(np.abs(b_t + da / a_t - L_t)))
    return Lemma4Result(t=tt, a=a_t, b=b_t, z=z.mean(axis=0), L=L_t, da=da,
                        residual_s_independence=spread, residual_bpL=bpl)


# ---------------------------------------------------------------------------
# grid sweeps


def grid_points(rect, ns, nt):
    """Flattened ``ns x nt`` node coordinates over ``(s0, s1, t0, t1)``; s varies slowest."""
    if ns < 2 or nt < 2:
        raise ValueError("grid needs at least 2 nodes per axis")
    s0, s1, t0, t1 = rect
    if not (s1 > s0 and t1 > t0):
        raise ValueError(f"degenerate rectangle {rect}")
    S, T = np.meshgrid(np.linspace(s0, s1, ns), np.linspace(t0, t1, nt), indexing="ij")
    return S.ravel(), T.ravel()


def pointwise(f, metric, c=0):
    """All residuals and values at the base points of the Vec4 jet ``f``."""
    from .geometry import gaussian_curvature_intrinsic, first_form, local_geometry

    lg = local_geometry(f, metric)
    n = f.shape[:-1]
    nan = np.full(n, np.nan)
    res, val = {}, {}
    HH = inner4(lg.H.value, lg.H.value)
    nH = nabla_perp_H(lg)
    res["quasiminimal_null"] = np.abs(HH)
    res["quasiminimal_nonzero"] = scale(lg.H.value)
    res["biconservative"] = biconservative_residual(lg, c)
    res["biharmonic"] = biharmonic_residual(lg, c)
    res["gauss"], res["codazzi"], res["ricci"] = integrability_residuals(lg, c)
    val["x"] = lg.f.value
    val["HH"] = HH
    val["nabla_perp_H"] = np.maximum(scale(nH[0].value), scale(nH[1].value))
    val["jet_scale"] = np.maximum(scale(lg.fs.value), scale(lg.ft.value))
    if metric is not None:
        m = lg.metric.m
        res["isometry"] = isometry_residual(lg, m)
        K = m.diff(2, 0)
        val["K"] = K
        val["m"], val["m_s"] = m.value, m.diff(1, 0)
        with np.errstate(all="ignore"):
            val["L"] = np.where(np.abs(K) > TAU_K, _L_from_jet(m), np.nan)
    else:
        res["isometry"] = np.zeros(n)
        val["K"] = gaussian_curvature_intrinsic(first_form(f))
        val["m"] = val["m_s"] = val["L"] = nan
    if lg.frame is not None:
        sc = frame_scalars(lg, c)
        res["h3_11"] = np.abs(sc["h3_11"].value)
        res["xi1"] = np.abs(sc["xi1"].value)
        res["biconservative_frame"] = biconservative_frame_assembly(lg, sc)
        for name in ("h3_22", "h4_11", "h4_22", "xi2", "phi1", "phi2"):
            val[name] = sc[name].value
        val["K_gauss"] = sc["K_gauss"]
    else:
        for name in ("h3_11", "xi1", "biconservative_frame"):
            res[name] = nan
        for name in ("h3_22", "h4_11", "h4_22", "xi2", "phi1", "phi2", "K_gauss"):
            val[name] = nan
    return res, val


def _threads():
    import os

    try:
        return max(1, int(os.environ.get("NEUTRALGEOM_THREADS", "1")))
    except ValueError:
        return 1


def evaluate(surface, ns=41, nt=41, rect=None, jets="analytic", fd_step=None, fd_order=4,
             c=0, tolerances=None, richardson=False):
    """Residual report of ``surface`` on an ``ns x nt`` grid.

    ``jets`` selects analytic jets or finite-difference jets of the
    surface's position sampler.  Work is split into chunks and spread over
    ``NEUTRALGEOM_THREADS`` threads.
    """
    from concurrent.futures import ThreadPoolExecutor

    from .jets import fd_jet

    if jets not in ("analytic", "fd"):
        raise ValueError(f"jets must be 'analytic' or 'fd', got {jets!r}")
    rect = tuple(rect or surface.domain)
    s, t = grid_points(rect, ns, nt)
    tol = tolerances or (Tolerances() if jets == "analytic" else Tolerances.for_fd())

    def work(idx):
        if jets == "analytic":
            f = surface.jet(s[idx], t[idx])
        else:
            f = fd_jet(surface.position, s[idx], t[idx], h=fd_step, order=fd_order,
                       richardson=richardson)
        return pointwise(f, surface.metric, c)

    nthreads = _threads()
    chunks = np.array_split(np.arange(s.size), max(1, min(nthreads * 4, s.size // 64 or 1)))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(idx) for idx in chunks]
    res = {k: np.concatenate([p[0][k] for p in parts]) for k in parts[0][0]}
    val = {k: np.concatenate([p[1][k] for p in parts]) for k in parts[0][1]}
    jet_scale = float(np.max(val.pop("jet_scale")))
    metadata = {
        "surface": getattr(surface, "name", None),
        "family": getattr(surface, "family", None),
        "spec_hash": getattr(surface, "spec_hash", None),
        "rect": list(rect),
        "jets": jets,
        "fd_step": fd_step,
        "fd_order": fd_order if jets == "fd" else None,
        "ambient_curvature": c,
        "jet_scale": jet_scale,
    }
    return ResidualReport((ns, nt), s, t, res, val, tol, metadata)
