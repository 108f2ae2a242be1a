"""Mean-curvature profile pipeline driven by the constants (c, C).

In the chart where the mean curvature f increases, f obeys the second-order
ODE

    f'' f - (7/4) f'^2 - (4/3) f^2 + 4 f^4 + (4/3) c^2 f^5 = 0,   f' > 0,

whose first integral is (f')^2 = P(f) with the profile polynomial

    P(f) = 2 C^2 f^(7/2) - (16/9) f^2 - 16 f^4 - (16/9) c^2 f^5.

The construction lives where P > 0; the connected positivity window around a
seed value is found by bracketed root finding.  Integration propagates the
system (f, f') with f'' = P'(f)/2, which is smooth through the window
endpoints, and is seeded on the f' > 0 branch; the defect (f')^2 - P(f) then
measures conservation instead of vanishing by construction.  Each sample
carries the derived scalars of the surface geometry:

    kappa     = 3 f' / (4 f)            level-circle curvature
    k         = f sqrt(1 + c^2 f)       directrix curvature in the 4-sphere
    tau       = c f' / (2 sqrt(f) (1 + c^2 f))     directrix torsion
    kappa_hat = (3 C / (2 sqrt(2))) f^(3/4)        curvature of the t-circles
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import WindowError
from .odecore import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    EventSpec,
    OdeProblem,
    Trajectory,
    find_root,
    integrate,
)

# Fraction of max(1, P(f0)) at which integration stops before a window
# endpoint; the surface requires grad f != 0, so turning points are excluded.
TURNING_POINT_GUARD = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """The two defining constants of one congruence class, plus tolerances.

    Both constants are non-zero in the construction; this artifact fixes the
    positive representatives (sign changes are congruences).
    """

    c: float
    C: float
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise ValueError("c must be finite and positive")
        if not (math.isfinite(self.C) and self.C > 0.0):
            raise ValueError("C must be finite and positive")


@dataclass(frozen=True)
class ProfileSample:
    """State of the profile pipeline at one parameter value."""

    u: float
    f: float
    fprime: float
    kappa: float
    k: float
    tau: float
    kappa_hat: float
    residual_ode: float
    residual_fi: float


@dataclass(frozen=True)
class FWindow:
    """Maximal interval around a seed on which the profile polynomial is positive."""

    f_lo: float
    f_hi: float
    evaluate: Callable[[float], float]

    @property
    def width(self):
        return self.f_hi - self.f_lo


def poly_P(f, params: ModelParams):
    """Profile polynomial P(f); accepts scalars or arrays of positive f.

    Grouped as f^2 * (2 C^2 f sqrt(f) - 16/9 - f^2 (16 + (16/9) c^2 f)) to
    keep the large leading terms from cancelling in a single flat sum.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0.0):
        raise ValueError("P(f) is defined for f > 0 only")
    c2 = params.c * params.c
    C2 = params.C * params.C
    inner = 2.0 * C2 * f * np.sqrt(f) - 16.0 / 9.0 - f * f * (16.0 + (16.0 / 9.0) * c2 * f)
    out = f * f * inner
    return float(out) if out.ndim == 0 else out


def poly_P_prime(f, params: ModelParams):
    """dP/df, used as the smooth right-hand side f'' = P'(f)/2."""
    f = np.asarray(f, dtype=float)
    c2 = params.c * params.c
    C2 = params.C * params.C
    out = (
        7.0 * C2 * f**2.5
        - (32.0 / 9.0) * f
        - 64.0 * f**3
        - (80.0 / 9.0) * c2 * f**4
    )
    return float(out) if out.ndim == 0 else out


def poly_P_second(f, params: ModelParams):
    """d^2P/df^2, needed for the analytic chain of kappa derivatives."""
    f = np.asarray(f, dtype=float)
    c2 = params.c * params.c
    C2 = params.C * params.C
    out = (
        17.5 * C2 * f**1.5
        - 32.0 / 9.0
        - 192.0 * f * f
        - (320.0 / 9.0) * c2 * f**3
    )
    return float(out) if out.ndim == 0 else out


def _peak_of_window(params):
    """Location of the unique maximum of P(f)/f^2 on f > 0.

    With x = sqrt(f), the derivative of P/f^2 is x * g(x) with
    g(x) = 3 C^2 - 32 x - (16/3) c^2 x^3 strictly decreasing, so g has one
    positive root and P/f^2 is unimodal.
    """
    c2 = params.c * params.c
    C2 = params.C * params.C

    def g(x):
        return 3.0 * C2 - 32.0 * x - (16.0 / 3.0) * c2 * x**3

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
    x_star = find_root(g, (0.0, hi), tol=1e-14)
    return x_star * x_star


def positivity_window(params: ModelParams) -> Optional[tuple]:
    """Endpoints (f_lo, f_hi) of the positivity window of P, or None if empty."""
    f_peak = _peak_of_window(params)
    if poly_P(f_peak, params) <= 0.0:
        return None

    def p(f):
        return poly_P(f, params)

    lo_bracket = f_peak
    while p(lo_bracket) > 0.0:
        lo_bracket *= 0.5
    f_lo = find_root(p, (lo_bracket, f_peak), tol=1e-14)

    hi_bracket = f_peak
    while p(hi_bracket) > 0.0:
        hi_bracket *= 2.0
    f_hi = find_root(p, (f_peak, hi_bracket), tol=1e-14)
    return f_lo, f_hi


def admissible_window(params: ModelParams, f_seed: float) -> FWindow:
    """Maximal interval around ``f_seed`` on which P > 0.

    Raises:
        WindowError: if P(f_seed) <= 0 (seed outside every window) or the
            window is empty.
    """
    if f_seed <= 0.0:
        raise WindowError("f_seed must be positive")
    if poly_P(f_seed, params) <= 0.0:
        raise WindowError(
            f"P(f_seed) <= 0 at f_seed={f_seed!r}; seed lies outside the "
            "positivity window"
        )
    endpoints = positivity_window(params)
    if endpoints is None:
        raise WindowError("profile polynomial has no positivity window")
    f_lo, f_hi = endpoints
    return FWindow(f_lo=f_lo, f_hi=f_hi, evaluate=lambda f: poly_P(f, params))


@dataclass
class ProfileRun:
    """An integrated mean-curvature profile with dense evaluation helpers."""

    params: ModelParams
    f0: float
    u_end: float
    samples: list
    window: FWindow
    trajectory: Trajectory
    hit_turning_guard: bool = False
    _fd_step: float = field(default=1e-4, repr=False)

    def state(self, u):
        """Dense (f, f') at parameter u."""
        f, fprime = self.trajectory(u)
        return float(f), float(fprime)

    def f(self, u):
        return self.state(u)[0]

    def curvature(self, u):
        """Directrix curvature k(u) = f sqrt(1 + c^2 f)."""
        f, _ = self.state(u)
        return directrix_curvature(f, self.params)

    def torsion(self, u):
        """Directrix torsion tau(u) = c f' / (2 sqrt(f) (1 + c^2 f))."""
        f, fprime = self.state(u)
        return directrix_torsion(f, fprime, self.params)

    def kappa_hat(self, u):
        f, _ = self.state(u)
        return circle_curvature(f, self.params)

    def inv_kappa_hat_prime(self, u):
        """d/du of 1/kappa_hat, the pinned first component of the frame tangent."""
        f, fprime = self.state(u)
        return -(math.sqrt(2.0) / (2.0 * self.params.C)) * f ** (-1.75) * fprime

    def kappa_chain(self, u):
        """(kappa, kappa', kappa'') from the dense state, by exact chain rule.

        Uses f'' = P'(f)/2 and f''' = P''(f) f'/2 along solutions.
        """
        f, fp = self.state(u)
        fpp = 0.5 * poly_P_prime(f, self.params)
        fppp = 0.5 * poly_P_second(f, self.params) * fp
        kappa = 0.75 * fp / f
        dkappa = 0.75 * (fpp / f - (fp / f) ** 2)
        ddkappa = 0.75 * (fppp / f - 3.0 * fp * fpp / (f * f) + 2.0 * (fp / f) ** 3)
        return kappa, dkappa, ddkappa

    def level_curvature_ode_residual(self, u):
        """Defect of the third-order level-curvature ODE along this profile.

        kappa, kappa', kappa'' come from the analytic chain; kappa''' is a
        fourth-order central difference of kappa'' on the dense output, so
        the residual genuinely tests that the profile reproduces the
        intrinsic ODE.  The fifth derivative of kappa is large in places,
        which rules out the plain three-point stencil at this tolerance.
        """
        h = max(1e-5, min(1e-3, self.u_end / 8.0))
        if u - 2.0 * h < 0.0 or u + 2.0 * h > self.u_end:
            raise ValueError("residual stencil must stay inside the run")
        kappa, dkappa, ddkappa = self.kappa_chain(u)
        _, _, dd_p2 = self.kappa_chain(u + 2.0 * h)
        _, _, dd_p1 = self.kappa_chain(u + h)
        _, _, dd_m1 = self.kappa_chain(u - h)
        _, _, dd_m2 = self.kappa_chain(u - 2.0 * h)
        dddkappa = (dd_m2 - 8.0 * dd_m1 + 8.0 * dd_p1 - dd_p2) / (12.0 * h)
        return (
            3.0 * kappa * dddkappa
            - 26.0 * kappa * kappa * ddkappa
            - 3.0 * dkappa * ddkappa
            + 72.0 * kappa**3 * dkappa
            - 32.0 * kappa**3
            - 32.0 * kappa**5
        )


def directrix_curvature(f, params: ModelParams):
    return f * math.sqrt(1.0 + params.c * params.c * f)


def directrix_torsion(f, fprime, params: ModelParams):
    c = params.c
    return c * fprime / (2.0 * math.sqrt(f) * (1.0 + c * c * f))


def circle_curvature(f, params: ModelParams):
    return 3.0 * params.C / (2.0 * math.sqrt(2.0)) * f**0.75


def second_order_residual(
    f: float, fprime: float, fsecond: float, params: ModelParams
) -> float:
    """Defect of the second-order mean-curvature ODE at the given jet."""
    c2 = params.c * params.c
    return (
        fsecond * f
        - 1.75 * fprime * fprime
        - (4.0 / 3.0) * f * f
        + 4.0 * f**4
        + (4.0 / 3.0) * c2 * f**5
    )


def first_integral_defect(f: float, fprime: float, params: ModelParams) -> float:
    """(f')^2 - P(f); identically zero along exact solutions."""
    return fprime * fprime - poly_P(f, params)


def _fd_second_derivative(traj, u, u_end, h):
    """f'' at u by differencing the dense f' component; second-order sided
    stencils are used near the ends of the run."""
    if u - h >= 0.0 and u + h <= u_end:
        return (traj(u + h)[1] - traj(u - h)[1]) / (2.0 * h)
    if u + 2.0 * h <= u_end:
        return (
            -3.0 * traj(u)[1] + 4.0 * traj(u + h)[1] - traj(u + 2.0 * h)[1]
        ) / (2.0 * h)
    return (3.0 * traj(u)[1] - 4.0 * traj(u - h)[1] + traj(u - 2.0 * h)[1]) / (
        2.0 * h
    )


def integrate_profile(
    params: ModelParams,
    f0: float,
    u_max_request: float,
    n_samples: int = 256,
    guard: float = TURNING_POINT_GUARD,
) -> ProfileRun:
    """Integrate the mean-curvature profile from f(0) = f0 with f' > 0.

    Propagates (f, f') with f'' = P'(f)/2 and stops at ``u_max_request`` or
    where P(f) falls to ``guard * max(1, P(f0))``, just before the turning
    point at the window's upper endpoint.

    Raises:
        WindowError: if the seed is outside the positivity window.
    """
    if u_max_request <= 0.0:
        raise ValueError("u_max_request must be positive")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    window = admissible_window(params, f0)
    P0 = poly_P(f0, params)
    eps_P = guard * max(1.0, P0)
    # The region where P < eps_P is a dip of width ~2 sqrt(eps_P)/|P'| that an
    # adaptive step can straddle entirely; f' - sqrt(eps_P) changes sign
    # persistently across the turning point, so the event cannot be missed.
    fprime_floor = math.sqrt(eps_P)

    def rhs(u, y):
        f, fprime = y
        return np.array([fprime, 0.5 * poly_P_prime(f, params)])

    def turning_guard(u, y):
        return y[1] - fprime_floor

    problem = OdeProblem(
        dimension=2,
        rhs=rhs,
        u_start=0.0,
        u_end=u_max_request,
        initial_state=np.array([f0, math.sqrt(P0)]),
    )
    traj = integrate(
        problem,
        rel_tol=params.rel_tol,
        abs_tol=params.abs_tol,
        events=[EventSpec(indicator=turning_guard, direction="falling")],
    )
    hit_guard = traj.event_u is not None
    u_end = traj.event_u if hit_guard else u_max_request

    h = max(1e-6, min(1e-4, u_end / 16.0))
    samples = []
    for u in np.linspace(0.0, u_end, n_samples):
        f, fprime = traj(u)
        fsecond = _fd_second_derivative(traj, u, u_end, h)
        samples.append(
            ProfileSample(
                u=float(u),
                f=float(f),
                fprime=float(fprime),
                kappa=float(0.75 * fprime / f),
                k=float(directrix_curvature(f, params)),
                tau=float(directrix_torsion(f, fprime, params)),
                kappa_hat=float(circle_curvature(f, params)),
                residual_ode=float(second_order_residual(f, fprime, fsecond, params)),
                residual_fi=float(first_integral_defect(f, fprime, params)),
            )
        )

    return ProfileRun(
        params=params,
        f0=f0,
        u_end=float(u_end),
        samples=samples,
        window=window,
        trajectory=traj,
        hit_turning_guard=hit_guard,
        _fd_step=h,
    )
