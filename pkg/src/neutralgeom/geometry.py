"""Extrinsic and intrinsic geometry of a surface patch, computed from jets.

Everything here works on batches: a Vec4 jet with coefficient shape
``(ncoef, N, 4)`` yields per-point arrays of length ``N``.  Second
fundamental form, mean curvature and normal frames are carried as jets so
that normal covariant derivatives are obtained by differentiating and
re-projecting.

Intrinsic data (Christoffel symbols, curvature) come from the supplied
metric, never from the immersion itself; comparing the two is what makes
the integrability residuals meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import jets as J
from .errors import IsometryViolation, NotLorentzian, VanishingCurvature, ZeroMeanCurvature
from .jets import Jet
from .linalg import SIGNATURE, inner4, scale

TAU_K = 1e-8
TAU_ISO = 1e-7
TAU_ISO_FD = 1e-4
TAU_LORENTZ = 1e-10
TAU_H = 1e-12


def _vec(scalar):
    return scalar[..., None]


@dataclass(frozen=True)
class FirstFundamentalForm:
    g11: Jet
    g12: Jet
    g22: Jet

    @property
    def det(self):
        return self.g11.value * self.g22.value - self.g12.value ** 2

    @classmethod
    def from_semi_geodesic(cls, m):
        return cls(m * 0.0, m * 0.0 - 1.0, m * 2.0)


def first_form(jet, tau=TAU_LORENTZ):
    fs, ft = jet.d_s(), jet.d_t()
    ff = FirstFundamentalForm(inner4(fs, fs), inner4(fs, ft), inner4(ft, ft))
    size = (scale(fs.value) * scale(ft.value)) ** 2
    if np.any(ff.det >= -tau * np.maximum(size, 1.0)):
        raise NotLorentzian(f"induced metric is not Lorentzian (max det {np.max(ff.det):.3e})")
    return ff


def gaussian_curvature_intrinsic(ff, tau=TAU_LORENTZ):
    """Brioschi formula: K from the first fundamental form and its derivatives."""
    E, F, G = ff.g11, ff.g12, ff.g22
    if E.degree < 2:
        raise ValueError("need metric jets of degree >= 2")
    det = ff.det
    if np.any(det >= -tau):
        raise NotLorentzian("metric is not Lorentzian")
    d = lambda u, i, j: u.diff(i, j)
    e, f, g = E.value, F.value, G.value
    top = np.array([
        [-0.5 * d(E, 0, 2) + d(F, 1, 1) - 0.5 * d(G, 2, 0), 0.5 * d(E, 1, 0), d(F, 1, 0) - 0.5 * d(E, 0, 1)],
        [d(F, 0, 1) - 0.5 * d(G, 1, 0), e, f],
        [0.5 * d(G, 0, 1), f, g],
    ])
    bottom = np.array([
        [np.zeros_like(e), 0.5 * d(E, 0, 1), 0.5 * d(G, 1, 0)],
        [0.5 * d(E, 0, 1), e, f],
        [0.5 * d(G, 1, 0), f, g],
    ])
    # move the 3x3 axes last for batched determinants
    top = np.moveaxis(top, (0, 1), (-2, -1))
    bottom = np.moveaxis(bottom, (0, 1), (-2, -1))
    return (np.linalg.det(top) - np.linalg.det(bottom)) / det**2


@dataclass(frozen=True)
class MetricData:
    """Metric, inverse and Christoffel symbols as jets at a batch of points.

    ``gamma[k][i][j]`` is the coefficient of ``d_k`` in ``nabla_{d_i} d_j``.
    """

    g: tuple
    ginv: tuple
    gamma: tuple
    m: Optional[Jet] = None

    def riemann(self):
        """``R[i][j][k][l] = <R(d_i, d_j) d_k, d_l>``.

        Convention ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``.
        """
        G = self.gamma
        up =[[[[None] * 2 for _ in range(2)] for _ in range(2)] for _ in range(2)]
        deriv = [[[(G[p][j][k].d_s(), G[p][j][k].d_t()) for k in range(2)] for j in range(2)]
                 for p in range(2)]
        for p in range(2):
            for i in range(2):
                for j in range(2):
                    for k in range(2):
                        r = deriv[p][j][k][i] - deriv[p][i][k][j]
                        for l in range(2):
                            r = r + G[l][j][k] * G[p][i][l] - G[l][i][k] * G[p][j][l]
                        up[p][i][j][k] = r
        R = [[[[None] * 2 for _ in range(2)] for _ in range(2)] for _ in range(2)]
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    R[i][j][k] = [up[0][i][j][k] * self.g[0][l] + up[1][i][j][k] * self.g[1][l]
                                  for l in range(2)]
        return R

    def curvature_from_riemann(self):
        R = self.riemann()
        det = self.g[0][0] * self.g[1][1] - self.g[0][1] * self.g[0][1]
        return R[0][1][1][0].value / det.value


@dataclass(frozen=True)
class SemiGeodesicMetric:
    """The metric ``-(ds dt + dt ds) + 2 m dt dt`` for a jet function ``m``."""

    m: Callable

    def jet(self, s, t, degree=J.DEFAULT_DEGREE):
        S, T = J.variables(s, t, degree)
        return J.as_jet(self.m(S, T), S)

    def values(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return np.broadcast_to(np.asarray(self.m(s, t), dtype=float), s.shape)

    def first_form(self, s, t, degree=J.DEFAULT_DEGREE):
        return FirstFundamentalForm.from_semi_geodesic(self.jet(s, t, degree))

    def metric_data(self, s, t, degree=J.DEFAULT_DEGREE):
        m = self.jet(s, t, degree)
        zero = m * 0.0
        g = ((zero, zero - 1.0), (zero - 1.0, m * 2.0))
        ginv = ((m * -2.0, zero - 1.0), (zero - 1.0, zero))
        return MetricData(g, ginv, _gm_christoffel(m), m)

    def gaussian_curvature(self, s, t):
        return self.jet(s, t, 2).diff(2, 0)


def _gm_christoffel(m):
    ms, mt = m.d_s(), m.d_t()
    zero = ms * 0.0
    # gamma[k][i][j]; k = 0 is the d_s coefficient
    return (
        ((zero, -ms), (-ms, m * ms * 2.0 - mt)),
        ((zero, zero), (zero, ms)),
    )


def connection_table_gm(metric, s, t):
    """Levi-Civita coefficients of ``g_m``: array ``[k, i, j]`` of values."""
    gamma = _gm_christoffel(metric.jet(s, t, 1))
    return np.array([[[gamma[k][i][j].value for j in range(2)] for i in range(2)] for k in range(2)])


def induced_metric_data(fs, ft):
    """Metric data of the induced (pulled-back) metric of an immersion."""
    g11, g12, g22 = inner4(fs, fs), inner4(fs, ft), inner4(ft, ft)
    det = g11 * g22 - g12 * g12
    g = ((g11, g12), (g12, g22))
    ginv = ((g22 / det, -g12 / det), (-g12 / det, g11 / det))
    dg = [[(g[a][b].d_s(), g[a][b].d_t()) for b in range(2)] for a in range(2)]
    lower = [[[0.5 * (dg[j][l][i] + dg[i][l][j] - dg[i][j][l]) for j in range(2)] for i in range(2)]
             for l in range(2)]
    gamma = tuple(
        tuple(tuple(ginv[k][0] * lower[0][i][j] + ginv[k][1] * lower[1][i][j] for j in range(2))
              for i in range(2))
        for k in range(2)
    )
    return MetricData(g, ginv, gamma, None)


def invariant_L_jet(m_fn, s, t, degree=1):
    """Jet of ``L = -(K_t + m K_s + 3 m_s K) / K`` with ``K = m_ss``."""
    S, T = J.variables(s, t, degree + 3)
    m = J.as_jet(m_fn(S, T), S)
    ms = m.d_s()
    K = ms.d_s()
    num = K.d_t() + m * K.d_s() + ms * K * 3.0
    K = K.truncate(num.degree)
    if np.any(np.abs(K.value) <= TAU_K):
        raise VanishingCurvature("Gaussian curvature vanishes; L is undefined")
    return -num / K


def invariant_L(metric, s, t, tau_K=TAU_K):
    m = metric.jet(s, t, 3)
    K = m.d_s().d_s()
    if np.any(np.abs(K.value) <= tau_K):
        raise VanishingCurvature("Gaussian curvature vanishes; L is undefined")
    return invariant_L_jet(metric.m, s, t, degree=0).value


# ---------------------------------------------------------------------------
# local extrinsic geometry


@dataclass(frozen=True)
class Frame:
    """Pseudo-orthonormal frame as jets: ``<e1,e2> = <e3,e4> = -1``."""

    e1: Jet
    e2: Jet
    e3: Jet
    e4: Jet


@dataclass
class LocalGeometry:
    f: Jet
    fs: Jet
    ft: Jet
    fd2: tuple  # ((f_ss, f_st), (f_st, f_tt))
    gram_inv: tuple
    alpha: tuple
    H: Jet
    metric: MetricData
    semi_geodesic: bool
    frame: Optional[Frame] = None

    @property
    def tangents(self):
        return (self.fs, self.ft)

    def tangential_coords(self, v):
        a, b = inner4(v, self.fs), inner4(v, self.ft)
        (i11, i12), (_, i22) = self.gram_inv
        return i11 * a + i12 * b, i12 * a + i22 * b

    def tangential(self, v):
        c1, c2 = self.tangential_coords(v)
        return _vec(c1) * self.fs + _vec(c2) * self.ft

    def normal(self, v):
        return v - self.tangential(v)

    def normal_derivative(self, v, axis):
        """``nabla^perp_{d_axis} v`` for a normal field ``v``."""
        return self.normal(v.d_s() if axis == 0 else v.d_t())

    def coord_vector(self, coeffs):
        return _vec(coeffs[0]) * self.fs + _vec(coeffs[1]) * self.ft


def null_partner(e3, normal):
    """The null normal ``e4`` with ``<e3, e4> = -1`` (``e3`` null normal jet).

    Uses the auxiliary normal ``n = normal(J e3(base))`` which satisfies
    ``<n, e3> = |e3(base)|^2 > 0`` at the base point, then fixes the
    combination ``lam n + mu e3`` by the two defining conditions.
    """
    n = normal(Jet.constant(SIGNATURE * e3.value, e3.degree, e3.base))
    ne3 = inner4(n, e3)
    lam = -1.0 / ne3
    mu = lam * lam * inner4(n, n) * 0.5
    return _vec(lam) * n + _vec(mu) * e3


def local_geometry(f, metric=None, tau=TAU_LORENTZ, build_frame=True):
    """Jets of tangents, second fundamental form and mean curvature vector.

    ``metric`` is a :class:`SemiGeodesicMetric` (the intended intrinsic
    metric of the patch) or ``None`` to use the induced metric.
    """
    fs, ft = f.d_s(), f.d_t()
    fss, fst, ftt = fs.d_s(), fs.d_t(), ft.d_t()
    ff = FirstFundamentalForm(inner4(fs, fs), inner4(fs, ft), inner4(ft, ft))
    size = np.maximum((scale(fs.value) * scale(ft.value)) ** 2, 1.0)
    if np.any(ff.det >= -tau * size):
        bad = np.argmax(ff.det)
        raise NotLorentzian(f"tangent plane not Lorentzian at point {np.unravel_index(bad, ff.det.shape)}")
    det = ff.g11 * ff.g22 - ff.g12 * ff.g12
    gram_inv = ((ff.g22 / det, -ff.g12 / det), (-ff.g12 / det, ff.g11 / det))
    if metric is None:
        md = induced_metric_data(fs, ft)
    else:
        s, t = f.base
        md = metric.metric_data(s, t, f.degree)
    lg = LocalGeometry(f, fs, ft, ((fss, fst), (fst, ftt)), gram_inv, None, None, md,
                       metric is not None)
    alpha = tuple(tuple(lg.normal(v) for v in row) for row in lg.fd2)
    lg.alpha = alpha
    gi = md.ginv
    H = (_vec(gi[0][0]) * alpha[0][0] + _vec(gi[0][1] * 2.0) * alpha[0][1]
         + _vec(gi[1][1]) * alpha[1][1]) * 0.5
    lg.H = H
    if build_frame and metric is not None:
        if np.any(scale(H.value) <= TAU_H):
            raise ZeroMeanCurvature("mean curvature vector vanishes on the patch")
        m = md.m
        e1 = fs
        e2 = _vec(m) * fs + ft
        e3 = -H
        e4 = null_partner(e3, lg.normal)
        lg.frame = Frame(e1, e2, e3, e4)
    return lg


def isometry_residual(lg, metric_m):
    """``max(|g11|, |g12 + 1|, |g22 - 2m|)`` per point."""
    fs, ft = lg.fs.value, lg.ft.value
    m = metric_m.value
    return np.max(np.abs(np.stack([
        inner4(fs, fs), inner4(fs, ft) + 1.0, inner4(ft, ft) - 2.0 * m,
    ])), axis=0)


@dataclass(frozen=True)
class PointGeometry:
    """Frame and curvature data at a batch of points (arrays, leading batch axes).

    ``L`` is ``nan`` where the Gaussian curvature is below tolerance.
    """

    s: np.ndarray
    t: np.ndarray
    f: np.ndarray
    f_s: np.ndarray
    f_t: np.ndarray
    f_ss: np.ndarray
    f_st: np.ndarray
    f_tt: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    e4: np.ndarray
    H: np.ndarray
    h3_11: np.ndarray
    h3_22: np.ndarray
    h4_11: np.ndarray
    h4_22: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    K: np.ndarray
    K_gauss: np.ndarray
    L: np.ndarray
    m: np.ndarray
    m_s: np.ndarray
    isometry: np.ndarray


def frame_scalars(lg, c=0.0):
    """h^alpha_ij, xi_i, phi_i and the extrinsic Gauss curvature as jets/values."""
    fr = lg.frame
    m = lg.metric.m
    a = lg.alpha
    a11 = a[0][0]
    a12 = _vec(m) * a[0][0] + a[0][1]
    a22 = _vec(m * m) * a[0][0] + _vec(m * 2.0) * a[0][1] + a[1][1]
    h3_11, h3_22 = inner4(a11, fr.e3), inner4(a22, fr.e3)
    h4_11, h4_22 = inner4(a11, fr.e4), inner4(a22, fr.e4)
    de3_s = fr.e3.d_s()
    de3_t = fr.e3.d_t()
    nab1 = lg.normal(de3_s)
    nab2 = lg.normal(_vec(m) * de3_s + de3_t)
    xi1 = -inner4(nab1, fr.e4)
    xi2 = -inner4(nab2, fr.e4)
    fss, fst = lg.fd2[0]
    phi1 = -inner4(fss, fr.e2)
    phi2 = -inner4(_vec(m) * fss + fst, fr.e2)
    K_gauss = c + h4_11.value * h3_22.value + h3_11.value * h4_22.value
    return dict(h3_11=h3_11, h3_22=h3_22, h4_11=h4_11, h4_22=h4_22, h3_12=inner4(a12, fr.e3),
                xi1=xi1, xi2=xi2, phi1=phi1, phi2=phi2, K_gauss=K_gauss)


def point_geometry(jet, metric, tau_iso=TAU_ISO, c=0.0):
    """Frame, second fundamental form and curvature data at the jet's base point(s)."""
    lg = local_geometry(jet, metric)
    s, t = jet.base
    m = lg.metric.m
    iso = isometry_residual(lg, m)
    if np.any(iso > tau_iso):
        worst = float(np.max(iso))
        raise IsometryViolation(f"induced metric differs from g_m by {worst:.3e}", worst)
    sc = frame_scalars(lg, c)
    K = m.diff(2, 0)
    with np.errstate(all="ignore"):
        L = np.where(np.abs(K) > TAU_K, _L_from_jet(m), np.nan)
    v = lambda x: x.value
    return PointGeometry(
        s=np.asarray(s), t=np.asarray(t),
        f=v(lg.f), f_s=v(lg.fs), f_t=v(lg.ft),
        f_ss=v(lg.fd2[0][0]), f_st=v(lg.fd2[0][1]), f_tt=v(lg.fd2[1][1]),
        e1=v(lg.frame.e1), e2=v(lg.frame.e2), e3=v(lg.frame.e3), e4=v(lg.frame.e4),
        H=v(lg.H),
        h3_11=v(sc["h3_11"]), h3_22=v(sc["h3_22"]), h4_11=v(sc["h4_11"]), h4_22=v(sc["h4_22"]),
        xi1=v(sc["xi1"]), xi2=v(sc["xi2"]), phi1=v(sc["phi1"]), phi2=v(sc["phi2"]),
        K=K, K_gauss=sc["K_gauss"], L=L, m=m.value, m_s=m.diff(1, 0), isometry=iso,
    )


def _L_from_jet(m):
    """L at the base point from a degree >= 3 jet of m (nan where K = 0)."""
    K = m.diff(2, 0)
    num = m.diff(2, 1) + m.value * m.diff(3, 0) + 3.0 * m.diff(1, 0) * K
    return -num / K
