"""Independent verification of a surface patch from its grid points alone.

Nothing from the construction pipeline is consumed except the grid of points
and the (c, C, f-per-row) metadata it claims; tangents, metric, second
fundamental form, mean curvature, shape operators and Gaussian curvature are
all recomputed here with central finite differences and compared against the
structural identities a PNMC biconservative patch must satisfy:

* the grid lies on the unit sphere of E^5;
* the chart is arclength in u and orthogonal (g_uu = 1, g_ut = 0);
* the shape operator of E3 = H/|H| has spectrum (-f, 3f) with the -f
  eigenvector along grad f, and the complementary operator is trace free
  with eigenvalues +- c f^(3/2);
* E3 is parallel in the normal bundle and A3(grad f) = -f grad f;
* the Gaussian curvature (both via the intrinsic Brioschi formula and via
  the Gauss equation) equals 1 - 3 f^2 - c^2 f^3 < 1;
* t-coordinate curves have constant geodesic curvature 3 f' / (4 f);
* the normal obstruction 4 c f^(7/2) to being biharmonic stays above a
  positive floor.

Finite differencing uses stride-based steps h = stride * grid spacing; all
stencils are second order, so halving the step divides residuals by about
four.  Fields are computed on the full grid with nan padding where a stencil
leaves the grid, which keeps the bookkeeping in plain array slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import VerificationInputError
from .extrinsic import SurfacePatch

WITNESS_FLOOR = 0.5

# (name, tolerance) in fixed report order; None means the tolerance is
# computed at run time (step-dependent metric truncation).
_ENTRY_TOLS = {
    "unit_sphere": 1e-8,
    "fd_metric_guu": None,
    "fd_metric_gut": None,
    "tangency": 1e-8,
    "f_rel": 1e-3,
    "shape_A3_spectrum": 1e-3,
    "shape_A3_offdiag": 1e-3,
    "shape_A4_trace": 1e-3,
    "shape_A4_offdiag": 1e-3,
    "recovered_c": 1e-3,
    "pnmc_residual": 1e-3,
    "biconservativity": 1e-3,
    "gradf_alignment": 1e-3,
    "gauss_K_intrinsic": 5e-3,
    "gauss_K_extrinsic": 5e-3,
    "gauss_K_consistency": 5e-3,
    "gauss_K_below_one": 0.0,
    "level_circle_constancy": 1e-3,
    "level_circle_value": 5e-3,
    "nonbiharmonic_witness": 0.0,
    "recovered_C": 1e-3,
    "codazzi_residual": 1e-2,
    "ricci_residual": 1e-2,
}


@dataclass(frozen=True)
class ReportEntry:
    """One verified identity: residual statistics against its tolerance.

    The convention is uniform: the entry passes iff ``max <= tol``.  For the
    two one-sided checks (witness floor, K < 1) the residual is the signed
    margin deficit, so a healthy patch reports a negative max.
    """

    name: str
    max: float
    mean: float
    tol: float
    passed: bool


@dataclass
class VerificationReport:
    entries: list
    level: str
    stride: int

    @property
    def overall(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> ReportEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


@dataclass
class LocalGeometry:
    """Recomputed first and second order data at one interior grid point."""

    phi: np.ndarray
    phi_u: np.ndarray
    phi_t: np.ndarray
    metric: np.ndarray
    normal1: np.ndarray
    normal2: np.ndarray
    second_fundamental: dict
    mean_curvature_vector: np.ndarray
    f_measured: float


def _shift(arr, di, dj):
    """arr[i + di, j + dj] with nan padding outside the grid."""
    nu, nt = arr.shape[0], arr.shape[1]
    out = np.full_like(arr, np.nan)
    i0, i1 = max(-di, 0), nu - max(di, 0)
    j0, j1 = max(-dj, 0), nt - max(dj, 0)
    if i1 > i0 and j1 > j0:
        out[i0:i1, j0:j1] = arr[i0 + di : i1 + di, j0 + dj : j1 + dj]
    return out


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


@dataclass
class GeometryGrid:
    """Vectorized finite-difference geometry over the whole patch.

    Border points where a stencil would leave the grid hold nan; reductions
    ignore them.
    """

    stride: int
    h_u: float
    h_t: float
    X: np.ndarray
    Xu: np.ndarray
    Xt: np.ndarray
    Xuu: np.ndarray
    Xut: np.ndarray
    Xtt: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    Buu: np.ndarray
    But: np.ndarray
    Btt: np.ndarray
    B11: np.ndarray
    B12: np.ndarray
    B22: np.ndarray
    H: np.ndarray
    f: np.ndarray
    E3: np.ndarray
    E4: np.ndarray
    A3: np.ndarray
    A4: np.ndarray

    def d_u(self, arr):
        return (_shift(arr, self.stride, 0) - _shift(arr, -self.stride, 0)) / (
            2.0 * self.h_u
        )

    def d_t(self, arr):
        return (_shift(arr, 0, self.stride) - _shift(arr, 0, -self.stride)) / (
            2.0 * self.h_t
        )

    def d2_u(self, arr):
        return (
            _shift(arr, self.stride, 0) - 2.0 * arr + _shift(arr, -self.stride, 0)
        ) / self.h_u**2

    def d2_t(self, arr):
        return (
            _shift(arr, 0, self.stride) - 2.0 * arr + _shift(arr, 0, -self.stride)
        ) / self.h_t**2

    def d_ut(self, arr):
        s = self.stride
        return (
            _shift(arr, s, s) - _shift(arr, s, -s) - _shift(arr, -s, s) + _shift(arr, -s, -s)
        ) / (4.0 * self.h_u * self.h_t)


def _grid_spacing(nodes, what):
    diffs = np.diff(nodes)
    if diffs.size == 0 or np.any(diffs <= 0):
        raise VerificationInputError(f"{what} nodes must be strictly increasing")
    h = float(diffs[0])
    if np.max(np.abs(diffs - h)) > 1e-9 * max(1.0, abs(h)):
        raise VerificationInputError(f"{what} nodes must be uniformly spaced")
    return h


def build_geometry(patch: SurfacePatch, stride: int = 1) -> GeometryGrid:
    """Recompute pointwise geometry from coordinates with stride-s stencils."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return _build_geometry(patch, stride)


def _build_geometry(patch, stride):
    # nan borders and degenerate inputs propagate silently here; explicit
    # checks downstream turn them into errors or failed entries
    if stride < 1:
        raise VerificationInputError("stride must be a positive integer")
    du = _grid_spacing(patch.u_nodes, "u")
    dt = _grid_spacing(patch.t_nodes, "t")
    if patch.n_u < 2 * stride + 1 or patch.n_t < 2 * stride + 1:
        raise VerificationInputError("grid too small for the requested stride")

    s = stride
    h_u, h_t = s * du, s * dt
    X = patch.points

    Xu = (_shift(X, s, 0) - _shift(X, -s, 0)) / (2.0 * h_u)
    Xt = (_shift(X, 0, s) - _shift(X, 0, -s)) / (2.0 * h_t)
    Xuu = (_shift(X, s, 0) - 2.0 * X + _shift(X, -s, 0)) / h_u**2
    Xtt = (_shift(X, 0, s) - 2.0 * X + _shift(X, 0, -s)) / h_t**2
    Xut = (
        _shift(X, s, s) - _shift(X, s, -s) - _shift(X, -s, s) + _shift(X, -s, -s)
    ) / (4.0 * h_u * h_t)

    E = _dot(Xu, Xu)
    F = _dot(Xu, Xt)
    G = _dot(Xt, Xt)
    detg = E * G - F * F

    # Orthonormal tangent frame from the coordinate tangents (Gram-Schmidt
    # in the order u then t, matching the grad-f direction first).
    e1 = Xu / np.sqrt(E)[..., None]
    w2 = Xt - (F / E)[..., None] * Xu
    w2n = np.sqrt(np.maximum(G - F * F / E, 0.0))
    e2 = w2 / w2n[..., None]

    # Normal space of the surface inside the sphere: orthogonal complement
    # of {X, Xu, Xt}.  q0 is the sphere normal (position vector).
    q0 = X / np.linalg.norm(X, axis=-1, keepdims=True)
    q1 = Xu - _dot(Xu, q0)[..., None] * q0
    q1 = q1 / np.linalg.norm(q1, axis=-1, keepdims=True)
    q2 = Xt - _dot(Xt, q0)[..., None] * q0 - _dot(Xt, q1)[..., None] * q1
    q2 = q2 / np.linalg.norm(q2, axis=-1, keepdims=True)

    def project_normal(V):
        return (
            V
            - _dot(V, q0)[..., None] * q0
            - _dot(V, q1)[..., None] * q1
            - _dot(V, q2)[..., None] * q2
        )

    Buu = project_normal(Xuu)
    But = project_normal(Xut)
    Btt = project_normal(Xtt)

    guu = G / detg
    gut = -F / detg
    gtt = E / detg
    H = 0.5 * (
        guu[..., None] * Buu + 2.0 * gut[..., None] * But + gtt[..., None] * Btt
    )
    f = np.linalg.norm(H, axis=-1)
    E3 = H / f[..., None]

    # Second fundamental form in the orthonormal tangent frame.
    alpha = 1.0 / np.sqrt(E)
    beta = -(F / E) / w2n
    gamma = 1.0 / w2n
    B11 = (alpha * alpha)[..., None] * Buu
    B12 = (alpha * beta)[..., None] * Buu + (alpha * gamma)[..., None] * But
    B22 = (
        (beta * beta)[..., None] * Buu
        + (2.0 * beta * gamma)[..., None] * But
        + (gamma * gamma)[..., None] * Btt
    )

    # Second unit normal: complete {E3} to a basis of the normal plane.  The
    # seed is the best-conditioned projected coordinate direction per point;
    # the result is seed-independent up to sign, and the sign is fixed so
    # that <B(e1,e1), E4> > 0 (the recovered constant c is positive).
    candidates = []
    for k in range(5):
        ek = np.zeros(5)
        ek[k] = 1.0
        v = project_normal(np.broadcast_to(ek, X.shape).copy())
        v = v - _dot(v, E3)[..., None] * E3
        candidates.append(v)
    norms = np.stack([np.linalg.norm(v, axis=-1) for v in candidates], axis=0)
    best = np.nanargmax(np.where(np.isnan(norms), -1.0, norms), axis=0)
    E4 = np.empty_like(E3)
    stacked = np.stack(candidates, axis=0)
    for k in range(5):
        mask = best == k
        E4[mask] = stacked[k][mask]
    E4 = E4 / np.linalg.norm(E4, axis=-1, keepdims=True)
    sign = np.sign(_dot(B11, E4))
    sign[sign == 0.0] = 1.0
    E4 = E4 * sign[..., None]

    def shape_matrix(normal):
        a = np.empty(X.shape[:2] + (2, 2))
        a[..., 0, 0] = _dot(B11, normal)
        a[..., 0, 1] = a[..., 1, 0] = _dot(B12, normal)
        a[..., 1, 1] = _dot(B22, normal)
        return a

    return GeometryGrid(
        stride=s,
        h_u=h_u,
        h_t=h_t,
        X=X,
        Xu=Xu,
        Xt=Xt,
        Xuu=Xuu,
        Xut=Xut,
        Xtt=Xtt,
        E=E,
        F=F,
        G=G,
        e1=e1,
        e2=e2,
        Buu=Buu,
        But=But,
        Btt=Btt,
        B11=B11,
        B12=B12,
        B22=B22,
        H=H,
        f=f,
        E3=E3,
        E4=E4,
        A3=shape_matrix(E3),
        A4=shape_matrix(E4),
    )


def local_geometry(patch: SurfacePatch, i: int, j: int, h_fd: float) -> LocalGeometry:
    """Recompute the geometry at one grid point with step h_fd.

    h_fd is realized as an integer stride times the grid spacing; it must be
    at least half the spacing.  The point must sit at least two strides from
    every boundary.

    Raises:
        VerificationInputError: for boundary indices, unresolvable h_fd, or
            a degenerate induced metric.
    """
    du = _grid_spacing(patch.u_nodes, "u")
    s = max(1, int(round(h_fd / du)))
    if h_fd < 0.5 * du:
        raise VerificationInputError(
            f"h_fd={h_fd!r} is below the grid spacing {du!r}"
        )
    if not (2 * s <= i < patch.n_u - 2 * s and 2 * s <= j < patch.n_t - 2 * s):
        raise VerificationInputError(
            f"point ({i}, {j}) is within two strides of the boundary"
        )

    lo_i, hi_i = i - 2 * s, i + 2 * s + 1
    lo_j, hi_j = j - 2 * s, j + 2 * s + 1
    sub = SurfacePatch(
        c=patch.c,
        C=patch.C,
        u_nodes=patch.u_nodes[lo_i:hi_i],
        t_nodes=patch.t_nodes[lo_j:hi_j],
        points=patch.points[lo_i:hi_i, lo_j:hi_j],
        f_values=patch.f_values[lo_i:hi_i],
        kappa_hat_values=patch.kappa_hat_values[lo_i:hi_i],
    )
    geo = build_geometry(sub, stride=s)
    ci, cj = 2 * s, 2 * s
    metric = np.array(
        [[geo.E[ci, cj], geo.F[ci, cj]], [geo.F[ci, cj], geo.G[ci, cj]]]
    )
    if np.linalg.det(metric) < 1e-12:
        raise VerificationInputError("degenerate induced metric at requested point")
    return LocalGeometry(
        phi=geo.X[ci, cj],
        phi_u=geo.Xu[ci, cj],
        phi_t=geo.Xt[ci, cj],
        metric=metric,
        normal1=geo.E3[ci, cj],
        normal2=geo.E4[ci, cj],
        second_fundamental={
            "uu": geo.Buu[ci, cj],
            "ut": geo.But[ci, cj],
            "tt": geo.Btt[ci, cj],
        },
        mean_curvature_vector=geo.H[ci, cj],
        f_measured=float(geo.f[ci, cj]),
    )


def _entry(name, residuals, tol):
    arr = np.asarray(residuals, dtype=float)
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        return ReportEntry(name=name, max=math.nan, mean=math.nan, tol=tol, passed=False)
    mx = float(np.max(finite))
    return ReportEntry(
        name=name, max=mx, mean=float(np.mean(finite)), tol=tol, passed=bool(mx <= tol)
    )


def _sym_eigvals(a):
    """Eigenvalues (low, high) of symmetric 2x2 matrices, vectorized."""
    m = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    r = np.sqrt((0.5 * (a[..., 0, 0] - a[..., 1, 1])) ** 2 + a[..., 0, 1] ** 2)
    return m - r, m + r


def check_shape_operators(geo: GeometryGrid, expected_c: float):
    """Spectra and frame alignment of both shape operators.

    A3 must be diag(-f, 3f) in the (grad f, level-circle) frame and the
    complementary operator trace-free with eigenvalue magnitude c f^(3/2);
    the magnitude ratio recovers c.
    """
    f = geo.f
    lo3, hi3 = _sym_eigvals(geo.A3)
    spectrum3 = np.maximum(np.abs(lo3 + f), np.abs(hi3 - 3.0 * f)) / f
    offdiag3 = np.maximum(
        np.abs(geo.A3[..., 0, 1]), np.abs(geo.A3[..., 0, 0] + f)
    ) / f

    f32 = f**1.5
    trace4 = np.abs(geo.A4[..., 0, 0] + geo.A4[..., 1, 1]) / f32
    offdiag4 = np.abs(geo.A4[..., 0, 1]) / f32
    _, hi4 = _sym_eigvals(geo.A4)
    c_rec = hi4 / f32
    c_err = np.abs(c_rec - expected_c) / expected_c

    return [
        _entry("shape_A3_spectrum", spectrum3, _ENTRY_TOLS["shape_A3_spectrum"]),
        _entry("shape_A3_offdiag", offdiag3, _ENTRY_TOLS["shape_A3_offdiag"]),
        _entry("shape_A4_trace", trace4, _ENTRY_TOLS["shape_A4_trace"]),
        _entry("shape_A4_offdiag", offdiag4, _ENTRY_TOLS["shape_A4_offdiag"]),
        _entry("recovered_c", c_err, _ENTRY_TOLS["recovered_c"]),
    ]


def check_pnmc_biconservative(geo: GeometryGrid):
    """Parallelism of E3 in the normal bundle and the defining shape identity.

    The normal derivative of E3 per unit length must vanish (PNMC) and
    A3(grad f) + f grad f must vanish relative to f |grad f|.
    """
    residuals = []
    for d_a, length in ((geo.d_u, np.sqrt(geo.E)), (geo.d_t, np.sqrt(geo.G))):
        D = d_a(geo.E3)
        comp3 = _dot(D, geo.E3)
        comp4 = _dot(D, geo.E4)
        residuals.append(np.sqrt(comp3**2 + comp4**2) / length)
    pnmc = np.maximum(*residuals)

    df_u = geo.d_u(geo.f)
    df_t = geo.d_t(geo.f)
    detg = geo.E * geo.G - geo.F**2
    wu = (geo.G * df_u - geo.F * df_t) / detg
    wt = (geo.E * df_t - geo.F * df_u) / detg
    W = wu[..., None] * geo.Xu + wt[..., None] * geo.Xt
    w1 = _dot(W, geo.e1)
    w2 = _dot(W, geo.e2)
    wnorm = np.sqrt(w1**2 + w2**2)
    r1 = geo.A3[..., 0, 0] * w1 + geo.A3[..., 0, 1] * w2 + geo.f * w1
    r2 = geo.A3[..., 1, 0] * w1 + geo.A3[..., 1, 1] * w2 + geo.f * w2
    bicons = np.sqrt(r1**2 + r2**2) / (geo.f * wnorm)
    alignment = np.abs(w2) / wnorm

    return [
        _entry("pnmc_residual", pnmc, _ENTRY_TOLS["pnmc_residual"]),
        _entry("biconservativity", bicons, _ENTRY_TOLS["biconservativity"]),
        _entry("gradf_alignment", alignment, _ENTRY_TOLS["gradf_alignment"]),
    ]


def _brioschi(geo: GeometryGrid):
    E, F, G = geo.E, geo.F, geo.G
    Eu, Ev = geo.d_u(E), geo.d_t(E)
    Gu, Gv = geo.d_u(G), geo.d_t(G)
    Fu, Fv = geo.d_u(F), geo.d_t(F)
    Evv = geo.d2_t(E)
    Guu = geo.d2_u(G)
    Fuv = geo.d_ut(F)

    a = -0.5 * Evv + Fuv - 0.5 * Guu
    row1 = (a, 0.5 * Eu, Fu - 0.5 * Ev)
    row2 = (Fv - 0.5 * Gu, E, F)
    row3 = (0.5 * Gv, F, G)

    def det3(r1, r2, r3):
        return (
            r1[0] * (r2[1] * r3[2] - r2[2] * r3[1])
            - r1[1] * (r2[0] * r3[2] - r2[2] * r3[0])
            + r1[2] * (r2[0] * r3[1] - r2[1] * r3[0])
        )

    m1 = det3(row1, row2, row3)
    m2 = det3((np.zeros_like(E), 0.5 * Ev, 0.5 * Gu), (0.5 * Ev, E, F), (0.5 * Gu, F, G))
    return (m1 - m2) / (E * G - F * F) ** 2


def check_gauss_relation(geo: GeometryGrid, expected_c: float):
    """Gaussian curvature, intrinsically and via the Gauss equation.

    Both determinations must match 1 - 3 f^2 - c^2 f^3 (with the measured f)
    and each other, and K must stay below 1.
    """
    K_int = _brioschi(geo)
    K_ext = 1.0 + _dot(geo.B11, geo.B22) - _dot(geo.B12, geo.B12)
    target = 1.0 - 3.0 * geo.f**2 - expected_c**2 * geo.f**3
    return [
        _entry("gauss_K_intrinsic", np.abs(K_int - target), _ENTRY_TOLS["gauss_K_intrinsic"]),
        _entry("gauss_K_extrinsic", np.abs(K_ext - target), _ENTRY_TOLS["gauss_K_extrinsic"]),
        _entry(
            "gauss_K_consistency", np.abs(K_ext - K_int), _ENTRY_TOLS["gauss_K_consistency"]
        ),
        _entry("gauss_K_below_one", K_int - 1.0, _ENTRY_TOLS["gauss_K_below_one"]),
    ]


def check_level_circles(geo: GeometryGrid):
    """Geodesic curvature of the t-coordinate curves (level curves of K).

    Per u-row the value must be constant (std / mean) and equal to
    3 f' / (4 f) with the measured f.  G_t is taken as 2 <Xt, Xtt> rather
    than by differencing the G field again, which keeps one stencil width
    of margin and lets the minimal 8 x 8 grid report usable rows.
    """
    Gt = 2.0 * _dot(geo.Xt, geo.Xtt)
    a = geo.Xtt / geo.G[..., None] - geo.Xt * (Gt / (2.0 * geo.G**2))[..., None]
    T = geo.Xt / np.sqrt(geo.G)[..., None]
    a1 = _dot(a, geo.e1)
    a2 = _dot(a, geo.e2)
    a_tan = a1[..., None] * geo.e1 + a2[..., None] * geo.e2
    a_perp = a_tan - _dot(a_tan, T)[..., None] * T
    kappa_g = np.linalg.norm(a_perp, axis=-1)

    target = 3.0 * geo.d_u(geo.f) / (4.0 * geo.f)
    constancy = []
    value_err = []
    for i in range(kappa_g.shape[0]):
        row = kappa_g[i]
        row = row[np.isfinite(row)]
        trow = target[i][np.isfinite(target[i])]
        if row.size < 5 or trow.size == 0:
            continue
        mean = float(np.mean(row))
        constancy.append(float(np.std(row)) / abs(mean))
        t = float(np.mean(trow))
        value_err.append(abs(mean - abs(t)) / abs(t))
    return [
        _entry("level_circle_constancy", constancy, _ENTRY_TOLS["level_circle_constancy"]),
        _entry("level_circle_value", value_err, _ENTRY_TOLS["level_circle_value"]),
    ]


def non_biharmonic_witness(geo: GeometryGrid, expected_c: float, floor: float = WITNESS_FLOOR):
    """Margin deficit of the biharmonic obstruction 4 c f^(7/2) over the patch."""
    witness = 4.0 * expected_c * geo.f**3.5
    finite = witness[np.isfinite(witness)]
    deficit = floor - finite
    return _entry("nonbiharmonic_witness", deficit, _ENTRY_TOLS["nonbiharmonic_witness"])


def _check_codazzi_ricci(geo: GeometryGrid):
    """Third-order residuals of the remaining structure equations.

    These need finite differences of already-differenced fields, so they are
    run only at the 'full' level with a loose tolerance.
    """
    detg = geo.E * geo.G - geo.F**2
    inv = np.empty(geo.E.shape + (2, 2))
    inv[..., 0, 0] = geo.G / detg
    inv[..., 0, 1] = inv[..., 1, 0] = -geo.F / detg
    inv[..., 1, 1] = geo.E / detg

    gmat = np.empty_like(inv)
    gmat[..., 0, 0] = geo.E
    gmat[..., 0, 1] = gmat[..., 1, 0] = geo.F
    gmat[..., 1, 1] = geo.G

    dg = np.stack([geo.d_u(gmat), geo.d_t(gmat)], axis=-3)

    # Christoffel symbols Gamma^c_{ab} = g^{cd}(d_a g_db + d_b g_da - d_d g_ab)/2
    gamma = np.empty(geo.E.shape + (2, 2, 2))
    for c in range(2):
        for a in range(2):
            for b in range(2):
                acc = 0.0
                for d in range(2):
                    acc = acc + inv[..., c, d] * (
                        dg[..., a, d, b] + dg[..., b, d, a] - dg[..., d, a, b]
                    )
                gamma[..., c, a, b] = 0.5 * acc

    # Coordinate matrices of b3, b4 and the shape operator of E3.
    b3 = np.empty_like(inv)
    b3[..., 0, 0] = _dot(geo.Buu, geo.E3)
    b3[..., 0, 1] = b3[..., 1, 0] = _dot(geo.But, geo.E3)
    b3[..., 1, 1] = _dot(geo.Btt, geo.E3)
    b4 = np.empty_like(inv)
    b4[..., 0, 0] = _dot(geo.Buu, geo.E4)
    b4[..., 0, 1] = b4[..., 1, 0] = _dot(geo.But, geo.E4)
    b4[..., 1, 1] = _dot(geo.Btt, geo.E4)
    A3c = np.einsum("...cd,...db->...cb", inv, b3)
    A4c = np.einsum("...cd,...db->...cb", inv, b4)

    # Normal connection form on (E3, E4).
    omega = np.stack(
        [_dot(geo.d_u(geo.E3), geo.E4), _dot(geo.d_t(geo.E3), geo.E4)], axis=-1
    )

    dA = np.stack([geo.d_u(A3c), geo.d_t(A3c)], axis=-3)

    def cov_deriv(a, b):
        # (nabla_a A)(e_b), contravariant component vector.
        out = dA[..., a, :, b].copy()
        for c in range(2):
            acc = out[..., c]
            for d in range(2):
                acc = acc + gamma[..., c, a, d] * A3c[..., d, b] - gamma[
                    ..., d, a, b
                ] * A3c[..., c, d]
            out[..., c] = acc
        return out

    lhs = cov_deriv(0, 1) - cov_deriv(1, 0)
    rhs = omega[..., 0, None] * A4c[..., :, 1] - omega[..., 1, None] * A4c[..., :, 0]
    res = lhs - rhs
    codazzi = np.sqrt(np.einsum("...a,...ab,...b->...", res, gmat, res))

    domega = geo.d_u(omega[..., 1]) - geo.d_t(omega[..., 0])
    ricci_rhs = np.einsum("...da,...db->...ab", A3c, b4) - np.einsum(
        "...ad,...db->...ab", b4, A3c
    )
    ricci = np.abs(domega - ricci_rhs[..., 0, 1]) / np.sqrt(detg)

    return [
        _entry("codazzi_residual", codazzi, _ENTRY_TOLS["codazzi_residual"]),
        _entry("ricci_residual", ricci, _ENTRY_TOLS["ricci_residual"]),
    ]


def _crop_for_fast(patch, stride):
    side = 4 + 6 * stride
    if patch.n_u <= side and patch.n_t <= side:
        return patch
    i0 = max(0, (patch.n_u - side) // 2)
    j0 = max(0, (patch.n_t - side) // 2)
    i1 = min(patch.n_u, i0 + side)
    j1 = min(patch.n_t, j0 + side)
    return SurfacePatch(
        c=patch.c,
        C=patch.C,
        u_nodes=patch.u_nodes[i0:i1],
        t_nodes=patch.t_nodes[j0:j1],
        points=patch.points[i0:i1, j0:j1],
        f_values=patch.f_values[i0:i1],
        kappa_hat_values=patch.kappa_hat_values[i0:i1],
    )


def verify_patch(
    patch: SurfacePatch,
    level: str = "full",
    stride: int = 1,
    witness_floor: float = WITNESS_FLOOR,
) -> VerificationReport:
    """Run every identity check and aggregate a report with fixed ordering.

    'fast' restricts the finite differencing to a small interior block and
    skips the third-order structure equations; 'full' covers every interior
    point.  A report is produced even when entries fail.

    Raises:
        VerificationInputError: if the grid is smaller than 8 x 8.
    """
    if level not in ("fast", "full"):
        raise VerificationInputError(f"unknown verification level {level!r}")
    if patch.n_u < 8 or patch.n_t < 8:
        raise VerificationInputError("verification needs a grid of at least 8 x 8")

    work = _crop_for_fast(patch, stride) if level == "fast" else patch
    geo = build_geometry(work, stride=stride)

    with np.errstate(invalid="ignore", divide="ignore"):
        return _assemble_report(work, geo, level, stride, witness_floor)


def _assemble_report(work, geo, level, stride, witness_floor):
    entries = []
    entries.append(
        _entry(
            "unit_sphere",
            np.abs(np.linalg.norm(work.points, axis=-1) - 1.0),
            _ENTRY_TOLS["unit_sphere"],
        )
    )
    metric_tol = max(1e-6, 2.0 * max(geo.h_u, geo.h_t) ** 2)
    entries.append(_entry("fd_metric_guu", np.abs(geo.E - 1.0), metric_tol))
    entries.append(
        _entry("fd_metric_gut", np.abs(geo.F) / np.sqrt(geo.E * geo.G), metric_tol)
    )
    tangency = np.maximum(np.abs(_dot(geo.X, geo.Xu)), np.abs(_dot(geo.X, geo.Xt)))
    entries.append(_entry("tangency", tangency, _ENTRY_TOLS["tangency"]))

    f_meta = work.f_values[:, None]
    entries.append(
        _entry("f_rel", np.abs(geo.f - f_meta) / f_meta, _ENTRY_TOLS["f_rel"])
    )

    entries.extend(check_shape_operators(geo, expected_c=work.c))
    entries.extend(check_pnmc_biconservative(geo))
    entries.extend(check_gauss_relation(geo, expected_c=work.c))
    entries.extend(check_level_circles(geo))
    entries.append(non_biharmonic_witness(geo, expected_c=work.c, floor=witness_floor))

    C_rec = np.sqrt(8.0 / (9.0 * geo.G * geo.f**1.5))
    entries.append(
        _entry("recovered_C", np.abs(C_rec - work.C) / work.C, _ENTRY_TOLS["recovered_C"])
    )

    if level == "full":
        entries.extend(_check_codazzi_ricci(geo))

    return VerificationReport(entries=entries, level=level, stride=stride)
