"""Surface assembly: pinned Frenet frame, directrix integration, patch sampling.

The surface is swept out by circles of curvature kappa_hat(u) lying in the
plane of the first two coordinate axes, attached to a directrix curve
gamma(u) on the unit sphere of E^5:

    Phi(u, t) = gamma(u) + (1/kappa_hat(u)) ((cos t - 1) e1 + sin t e2).

gamma and its Frenet frame {V1, V2, V3} live in the hyperplane orthogonal to
e2 and satisfy

    gamma' = V1,   V1' = k V2 - gamma,   V2' = -k V1 + tau V3,   V3' = -tau V2,

with the curvature k(u) and torsion tau(u) supplied by the mean-curvature
profile.  The first coordinates of the frame are pinned by the construction:

    gamma^1 = 1/kappa_hat,
    V1^1    = d(1/kappa_hat)/du,
    V2^1    = 2 sqrt(2) (3 + c^2 f) f^(1/4) / (3 C sqrt(1 + c^2 f)),
    V3^1    = -4 sqrt(2) c f^(3/4) / (3 C sqrt(1 + c^2 f)),

and these four numbers form a unit vector; the identity is checked at
construction time and guards the sign and constant of V1^1.  The remaining
components (axes e3, e4, e5) are completed deterministically; the residual
freedom is an ambient rotation fixing the circle plane, i.e. a congruence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FrameError, PatchError
from .odecore import OdeProblem, Trajectory, integrate
from .profile import (
    ModelParams,
    ProfileRun,
    ProfileSample,
    circle_curvature,
    integrate_profile,
)

GRAM_ABORT = 1e-6
UNIT_NORM_CONSTRUCTION_TOL = 1e-10


@dataclass
class FrenetState:
    """Directrix point and frame vectors in E^5; e2-components are zero."""

    gamma: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray

    def as_matrix(self):
        """Rows (gamma, V1, V2, V3), shape (4, 5)."""
        return np.vstack([self.gamma, self.V1, self.V2, self.V3])

    def gram_defect(self):
        """Max deviation of the frame Gram matrix from the identity."""
        m = self.as_matrix()
        return float(np.max(np.abs(m @ m.T - np.eye(4))))


def pinned_components(params: ModelParams, f: float, fprime: float):
    """First coordinates (gamma^1, V1^1, V2^1, V3^1) of the initial frame."""
    c, C = params.c, params.C
    c2f = c * c * f
    root = math.sqrt(1.0 + c2f)
    gamma1 = 2.0 * math.sqrt(2.0) / (3.0 * C) * f ** (-0.75)
    v1 = -(math.sqrt(2.0) / (2.0 * C)) * f ** (-1.75) * fprime
    v2 = 2.0 * math.sqrt(2.0) * (3.0 + c2f) * f**0.25 / (3.0 * C * root)
    v3 = -4.0 * math.sqrt(2.0) * c * f**0.75 / (3.0 * C * root)
    return gamma1, v1, v2, v3


def initial_frame(params: ModelParams, profile_at_u0: ProfileSample) -> FrenetState:
    """Build the starting frame from a profile sample with f' > 0.

    The pinned first components must form a unit vector; a defect beyond
    1e-8 signals inconsistent inputs (wrong constants for the sample).
    The e3..e5 block is completed by orthonormalizing the projections of
    the coordinate directions onto the complement of the pinned vector,
    in a fixed order, so the construction is deterministic.

    Raises:
        FrameError: if the pinned components fail the unit-norm identity.
    """
    f, fprime = profile_at_u0.f, profile_at_u0.fprime
    if f <= 0.0 or fprime <= 0.0:
        raise FrameError("initial frame needs a profile sample with f > 0, f' > 0")
    a = np.array(pinned_components(params, f, fprime))
    norm_defect = abs(float(a @ a) - 1.0)
    if norm_defect > 1e-8:
        raise FrameError(
            f"pinned frame components are not a unit vector (defect {norm_defect:.3e}); "
            "profile sample and constants are inconsistent"
        )
    a = a / math.sqrt(float(a @ a))

    # Orthonormal basis of the complement of a in R^4.  Projections of the
    # first three coordinate directions are always independent here because
    # the last pinned component never vanishes (c > 0).
    basis = []
    for k in range(3):
        w = np.zeros(4)
        w[k] = 1.0
        w = w - (w @ a) * a
        for q in basis:
            w = w - (w @ q) * q
        norm = float(np.linalg.norm(w))
        if norm < 1e-12:
            raise FrameError("degenerate frame completion")
        basis.append(w / norm)

    m = np.zeros((4, 5))
    m[:, 0] = a
    for k, q in enumerate(basis):
        m[:, 2 + k] = q
    return FrenetState(gamma=m[0], V1=m[1], V2=m[2], V3=m[3])


@dataclass
class FrameRun:
    """Frenet frame along the directrix with dense evaluation."""

    params: ModelParams
    u_end: float
    trajectory: Trajectory
    max_gram_defect: float

    def frame(self, u) -> FrenetState:
        y = self.trajectory(u).reshape(4, 5)
        return FrenetState(gamma=y[0].copy(), V1=y[1].copy(), V2=y[2].copy(), V3=y[3].copy())


def integrate_frenet(
    params: ModelParams,
    profile: ProfileRun,
    start: FrenetState,
    u_span: Optional[float] = None,
    renormalize_every: Optional[float] = None,
) -> FrameRun:
    """Propagate the frame along the directrix over [0, u_span].

    k(u) and tau(u) are evaluated from the profile's dense output, not from
    tabulated samples, so the frame integrator sees them at its own order.
    The system matrix is skew, hence the orthonormal configuration is a
    fixed point of the Gram dynamics; the defect accumulated by the
    integrator is monitored and the run aborts above 1e-6.  The
    e2-components are exactly zero throughout: the right-hand side forms
    linear combinations of vectors whose e2-components are zero.

    ``renormalize_every`` re-orthonormalizes the frame at that parameter
    interval (useful for long runs only; off by default).

    Raises:
        FrameError: on Gram drift beyond 1e-6, reporting the first bad u.
    """
    if u_span is None:
        u_span = profile.u_end
    if u_span <= 0.0 or u_span > profile.u_end + 1e-12:
        raise ValueError(
            f"u_span must lie in (0, {profile.u_end!r}], the range covered by the profile"
        )

    def rhs(u, y):
        g, v1, v2, v3 = y.reshape(4, 5)
        k = profile.curvature(u)
        tau = profile.torsion(u)
        return np.concatenate([v1, k * v2 - g, -k * v1 + tau * v3, -tau * v2])

    def run_segment(y0, u0, u1):
        problem = OdeProblem(
            dimension=20, rhs=rhs, u_start=u0, u_end=u1, initial_state=y0
        )
        return integrate(problem, rel_tol=params.rel_tol, abs_tol=params.abs_tol)

    y0 = start.as_matrix().reshape(-1)
    if renormalize_every is None:
        traj = run_segment(y0, 0.0, u_span)
    else:
        traj = _integrate_chunked(run_segment, y0, u_span, renormalize_every)

    defect = _max_gram_defect(traj)
    if defect[0] > GRAM_ABORT:
        raise FrameError(
            f"frame Gram drift {defect[0]:.3e} exceeds {GRAM_ABORT:g} at u={defect[1]!r}",
            u_last=defect[1],
        )
    return FrameRun(
        params=params, u_end=float(u_span), trajectory=traj, max_gram_defect=defect[0]
    )


def _max_gram_defect(traj):
    worst = 0.0
    worst_u = float(traj.nodes[0])
    for u, y in zip(traj.nodes, traj.states):
        m = y.reshape(4, 5)
        d = float(np.max(np.abs(m @ m.T - np.eye(4))))
        if d > worst:
            worst, worst_u = d, float(u)
    return worst, worst_u


def _orthonormalize_rows(m):
    out = m.copy()
    for i in range(4):
        for j in range(i):
            out[i] -= (out[i] @ out[j]) * out[j]
        out[i] /= np.linalg.norm(out[i])
    return out


class _PiecewiseTrajectory:
    """Dense evaluation over chunked segments; mimics Trajectory's interface."""

    def __init__(self, segments):
        self.segments = segments
        self.nodes = np.concatenate([s.nodes for s in segments])
        self.states = np.vstack([s.states for s in segments])
        self.u_end = float(segments[-1].nodes[-1])

    def __call__(self, u):
        for seg in self.segments:
            if u <= seg.nodes[-1] + 1e-15:
                return seg(u)
        return self.segments[-1](u)


def _integrate_chunked(run_segment, y0, u_span, interval):
    if interval <= 0:
        raise ValueError("renormalize_every must be positive")
    segments = []
    u0, y = 0.0, y0
    while u0 < u_span - 1e-15:
        u1 = min(u0 + interval, u_span)
        seg = run_segment(y, u0, u1)
        segments.append(seg)
        y = _orthonormalize_rows(seg.states[-1].reshape(4, 5)).reshape(-1)
        u0 = u1
    return _PiecewiseTrajectory(segments)


def surface_point(frame_at_u: FrenetState, kappa_hat: float, t: float) -> np.ndarray:
    """Phi(u, t) for one frame state; at t = 0 this is the directrix point."""
    if kappa_hat <= 0.0:
        raise ValueError("kappa_hat must be positive")
    p = frame_at_u.gamma.copy()
    r = 1.0 / kappa_hat
    p[0] += r * (math.cos(t) - 1.0)
    p[1] += r * math.sin(t)
    return p


@dataclass
class SurfacePatch:
    """Grid of surface points Phi(u_i, t_j) with construction metadata.

    ``points`` has shape (n_u, n_t, 5).  ``frames`` (shape (n_u, 4, 5)) and
    ``fprime_values`` are construction extras used by quality checks; they
    are absent on patches read back from CSV.
    """

    c: float
    C: float
    u_nodes: np.ndarray
    t_nodes: np.ndarray
    points: np.ndarray
    f_values: np.ndarray
    kappa_hat_values: np.ndarray
    fprime_values: Optional[np.ndarray] = None
    frames: Optional[np.ndarray] = None

    def __post_init__(self):
        self.u_nodes = np.asarray(self.u_nodes, dtype=float)
        self.t_nodes = np.asarray(self.t_nodes, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        n_u, n_t = self.u_nodes.size, self.t_nodes.size
        if self.points.shape != (n_u, n_t, 5):
            raise PatchError(
                f"points shape {self.points.shape} does not match grid ({n_u}, {n_t}, 5)"
            )
        for name in ("f_values", "kappa_hat_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, arr)
            if arr.shape != (n_u,):
                raise PatchError(f"{name} must have one value per u node")

    @property
    def n_u(self):
        return self.u_nodes.size

    @property
    def n_t(self):
        return self.t_nodes.size

    def unit_norm_defect(self):
        """Max | |Phi| - 1 | over the grid."""
        return float(np.max(np.abs(np.linalg.norm(self.points, axis=2) - 1.0)))


def sample_patch(
    params: ModelParams,
    f0: float,
    u_span: float,
    n_u: int,
    n_t: int,
    t_span: float = 2.0 * math.pi,
    t_start: float = 0.0,
    renormalize_every: Optional[float] = None,
) -> SurfacePatch:
    """Run the full pipeline and sample the parametrization on a grid.

    u nodes are uniform and inclusive on [0, u_span]; t nodes are uniform
    with spacing t_span / n_t starting at ``t_start`` (half-open, so the
    default t_span of one full turn does not duplicate the seam).

    Raises:
        PatchError: if the requested u_span exceeds the distance to the
            window's turning point, or the grid fails the unit-norm check.
    """
    if n_u < 4 or n_t < 4:
        raise ValueError("n_u and n_t must be at least 4")
    if not (0.0 < t_span <= 2.0 * math.pi):
        raise ValueError("t_span must lie in (0, 2*pi]")

    profile = integrate_profile(params, f0, u_max_request=u_span)
    if profile.u_end < u_span:
        raise PatchError(
            f"u_span {u_span!r} reaches past the turning point; the profile "
            f"from f0={f0!r} covers only u <= {profile.u_end!r}"
        )
    frame_run = integrate_frenet(params, profile, initial_frame(params, profile.samples[0]))

    u_nodes = np.linspace(0.0, u_span, n_u)
    t_nodes = t_start + np.arange(n_t) * (t_span / n_t)

    frames = np.empty((n_u, 4, 5))
    f_values = np.empty(n_u)
    fprime_values = np.empty(n_u)
    for i, u in enumerate(u_nodes):
        frames[i] = frame_run.trajectory(u).reshape(4, 5)
        f_values[i], fprime_values[i] = profile.state(u)
    kappa_hat_values = np.array([circle_curvature(f, params) for f in f_values])

    cos_t = np.cos(t_nodes)
    sin_t = np.sin(t_nodes)
    points = np.repeat(frames[:, 0, :][:, None, :], n_t, axis=1)
    radii = 1.0 / kappa_hat_values
    points[:, :, 0] += radii[:, None] * (cos_t - 1.0)[None, :]
    points[:, :, 1] += radii[:, None] * sin_t[None, :]

    patch = SurfacePatch(
        c=params.c,
        C=params.C,
        u_nodes=u_nodes,
        t_nodes=t_nodes,
        points=points,
        f_values=f_values,
        kappa_hat_values=kappa_hat_values,
        fprime_values=fprime_values,
        frames=frames,
    )
    defect = patch.unit_norm_defect()
    if defect > UNIT_NORM_CONSTRUCTION_TOL:
        raise PatchError(
            f"constructed patch leaves the unit sphere by {defect:.3e}; "
            "shorten u_span or pass renormalize_every"
        )
    return patch


def constraint_defect(patch: SurfacePatch) -> float:
    """Max |<gamma, e1> - 1/kappa_hat| over the patch's u nodes.

    The first frame coordinate must track 1/kappa_hat without re-projection;
    this is the preserved-constraint invariant of the construction.
    """
    if patch.frames is None:
        raise PatchError("patch carries no frames (was it read back from CSV?)")
    gamma1 = patch.frames[:, 0, 0]
    return float(np.max(np.abs(gamma1 - 1.0 / patch.kappa_hat_values)))


def metric_defects(patch: SurfacePatch) -> dict:
    """Construction-side induced metric checks from the integrated frame.

    Uses the analytic tangents

        Phi_u = V1 + (1/kappa_hat)' ((cos t - 1) e1 + sin t e2),
        Phi_t = (1/kappa_hat) (-sin t e1 + cos t e2),

    and returns max |g_uu - 1|, max |g_ut| and max |g_tt * kappa_hat^2 - 1|.
    """
    if patch.frames is None or patch.fprime_values is None:
        raise PatchError("metric defects need a patch with construction extras")
    params = ModelParams(c=patch.c, C=patch.C)
    cos_t, sin_t = np.cos(patch.t_nodes), np.sin(patch.t_nodes)
    inv_khat = 1.0 / patch.kappa_hat_values
    inv_khat_prime = (
        -(math.sqrt(2.0) / (2.0 * params.C))
        * patch.f_values ** (-1.75)
        * patch.fprime_values
    )

    v1 = patch.frames[:, 1, :]
    phi_u = np.repeat(v1[:, None, :], patch.n_t, axis=1)
    phi_u[:, :, 0] += inv_khat_prime[:, None] * (cos_t - 1.0)[None, :]
    phi_u[:, :, 1] += inv_khat_prime[:, None] * sin_t[None, :]

    phi_t = np.zeros((patch.n_u, patch.n_t, 5))
    phi_t[:, :, 0] = -inv_khat[:, None] * sin_t[None, :]
    phi_t[:, :, 1] = inv_khat[:, None] * cos_t[None, :]

    g_uu = np.einsum("ijk,ijk->ij", phi_u, phi_u)
    g_ut = np.einsum("ijk,ijk->ij", phi_u, phi_t)
    g_tt = np.einsum("ijk,ijk->ij", phi_t, phi_t)
    return {
        "g_uu": float(np.max(np.abs(g_uu - 1.0))),
        "g_ut": float(np.max(np.abs(g_ut))),
        "g_tt_scaled": float(
            np.max(np.abs(g_tt * patch.kappa_hat_values[:, None] ** 2 - 1.0))
        ),
    }
