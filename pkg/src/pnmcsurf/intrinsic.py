"""Intrinsic construction pipeline driven by the level-curve curvature ODE.

An abstract surface admitting a PNMC biconservative immersion in the unit
4-sphere is determined (up to isometry) by the signed curvature kappa of the
level circles of its Gaussian curvature.  kappa obeys a third-order ODE,

    3 k k''' + 26 k^2 k'' - 3 k' k'' + 72 k^3 k' + 32 k^3 + 32 k^5 = 0,

subject to strict inequalities on (kappa, kappa', kappa'') that keep the
derived quantities meaningful:

    K   = -kappa^2 - kappa'          (Gaussian curvature, must stay < 1)
    f_K = sqrt((k'' + 6kk' + 4k + 4k^3) / (4k))     (mean curvature, > 0)
    c^2 = -2 sqrt(k) (3k'' + 14kk' + 8k + 8k^3)
          / (k'' + 6kk' + 4k + 4k^3)^(3/2)          (conserved, > 0)

c^2 is an exact first integral of the flow; its numerical drift is the
quality gate for a run.  This module integrates the augmented system
(kappa, kappa', kappa'', log theta) with (log theta)' = kappa and theta(0)=1,
detects where the validity inequalities fail, and converts runs to the chart
in which the mean curvature increases (the convention the extrinsic pipeline
uses).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InadmissibleInitialData
from .odecore import (
    DEFAULT_ABS_TOL,
    DEFAULT_REL_TOL,
    EventSpec,
    OdeProblem,
    Trajectory,
    find_root,
    integrate,
)

# Margin enforced on the strict validity inequalities at the event detector.
EPSILON_VALID = 1e-10

# Samples are placed on a uniform grid that stops short of the detected
# boundary by this fraction of the run.  The conserved-quantity formulas are
# ratios of margins that vanish at the boundary, so samples taken inside the
# final layer would amplify integrator error without adding information.
BOUNDARY_INSET = 1.0 / 32.0


@dataclass(frozen=True)
class InitialTriple:
    """Initial values (kappa, kappa', kappa'') of the level-curve curvature."""

    kappa0: float
    dkappa0: float
    ddkappa0: float

    def __post_init__(self):
        for name in ("kappa0", "dkappa0", "ddkappa0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class Admissibility:
    """Verdict of the strict inequalities, with signed margins to each bound.

    All four margins must be strictly positive for an admissible triple.
    ``ddkappa_lower``/``ddkappa_upper`` are the open interval bounds imposed
    on kappa''(0) by positivity of f_K^2 and c^2 respectively.
    """

    admissible: bool
    margin_kappa: float
    margin_gauss: float
    margin_mean_curvature: float
    margin_conserved: float
    ddkappa_lower: float
    ddkappa_upper: float

    @property
    def margins(self):
        return (
            self.margin_kappa,
            self.margin_gauss,
            self.margin_mean_curvature,
            self.margin_conserved,
        )


@dataclass(frozen=True)
class IntrinsicSample:
    """State of the intrinsic pipeline at one parameter value."""

    u: float
    kappa: float
    dkappa: float
    ddkappa: float
    theta: float
    K: float
    f_K: float
    c2: float


@dataclass
class IntrinsicSolution:
    """An integrated run of the curvature ODE on its validity interval.

    ``samples`` live on [0, u_max); ``u_max`` is where a validity inequality
    first reached the event margin, or the requested endpoint.  The trajectory
    is kept for dense evaluation.
    """

    triple: InitialTriple
    samples: list
    u_max: float
    c2_reference: float
    c2_drift: float
    trajectory: Trajectory
    boundary_event: Optional[str] = None


def kappa_rhs(kappa: float, dkappa: float, ddkappa: float) -> float:
    """Third derivative of the level-curve curvature, solved from its ODE.

    Raises:
        ZeroDivisionError: at kappa = 0, which lies outside the validity
            region (the construction requires kappa > 0).
    """
    if kappa == 0.0:
        raise ZeroDivisionError("curvature ODE is singular at kappa = 0")
    k2 = kappa * kappa
    num = (
        -26.0 * k2 * ddkappa
        + 3.0 * dkappa * ddkappa
        - 72.0 * k2 * kappa * dkappa
        - 32.0 * k2 * kappa
        - 32.0 * k2 * k2 * kappa
    )
    return num / (3.0 * kappa)


def _ddkappa_bounds(kappa, dkappa):
    lower = -4.0 * kappa - 6.0 * kappa * dkappa - 4.0 * kappa**3
    upper = (-8.0 * kappa - 14.0 * kappa * dkappa - 8.0 * kappa**3) / 3.0
    return lower, upper


def check_admissible(triple: InitialTriple) -> Admissibility:
    """Evaluate the strict admissibility inequalities for initial data.

    The three conditions are kappa0 > 0, kappa0' > -1 - kappa0^2, and
    lower < kappa0'' < upper with the bounds from :func:`_ddkappa_bounds`.
    Total function: never raises on finite input.
    """
    k, dk, ddk = triple.kappa0, triple.dkappa0, triple.ddkappa0
    lower, upper = _ddkappa_bounds(k, dk)
    margin_kappa = k
    margin_gauss = dk + 1.0 + k * k
    margin_mean = ddk - lower
    margin_conserved = upper - ddk
    ok = (
        margin_kappa > 0.0
        and margin_gauss > 0.0
        and margin_mean > 0.0
        and margin_conserved > 0.0
    )
    return Admissibility(
        admissible=ok,
        margin_kappa=margin_kappa,
        margin_gauss=margin_gauss,
        margin_mean_curvature=margin_mean,
        margin_conserved=margin_conserved,
        ddkappa_lower=lower,
        ddkappa_upper=upper,
    )


def gauss_curvature(kappa: float, dkappa: float) -> float:
    """Gaussian curvature K = -kappa^2 - kappa'."""
    return -kappa * kappa - dkappa


def mean_curvature_squared(kappa, dkappa, ddkappa):
    """f_K^2 = (kappa'' + 6 kappa kappa' + 4 kappa + 4 kappa^3) / (4 kappa)."""
    return (ddkappa + 6.0 * kappa * dkappa + 4.0 * kappa + 4.0 * kappa**3) / (
        4.0 * kappa
    )


def conserved_c2(kappa, dkappa, ddkappa):
    """The conserved constant c^2 evaluated from (kappa, kappa', kappa'')."""
    denom = ddkappa + 6.0 * kappa * dkappa + 4.0 * kappa + 4.0 * kappa**3
    num = 3.0 * ddkappa + 14.0 * kappa * dkappa + 8.0 * kappa + 8.0 * kappa**3
    return -2.0 * math.sqrt(kappa) * num / denom**1.5


def _sample_at(u, kappa, dkappa, ddkappa, log_theta):
    fk2 = mean_curvature_squared(kappa, dkappa, ddkappa)
    return IntrinsicSample(
        u=float(u),
        kappa=float(kappa),
        dkappa=float(dkappa),
        ddkappa=float(ddkappa),
        theta=float(math.exp(log_theta)),
        K=float(gauss_curvature(kappa, dkappa)),
        f_K=float(math.sqrt(fk2)),
        c2=float(conserved_c2(kappa, dkappa, ddkappa)),
    )


_EVENT_NAMES = ("kappa", "gauss", "mean_curvature", "conserved")


def integrate_intrinsic(
    triple: InitialTriple,
    u_max_request: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    n_samples: int = 256,
    epsilon_valid: float = EPSILON_VALID,
) -> IntrinsicSolution:
    """Integrate the curvature ODE from admissible data with validity events.

    The augmented state is (kappa, kappa', kappa'', log theta).  Integration
    stops at ``u_max_request`` or where any validity margin falls to
    ``epsilon_valid``, whichever comes first.  Samples carry the derived
    scalars (theta, K, f_K, c^2) on a uniform grid over [0, u_max) with a
    small inset before a detected boundary.

    Raises:
        InadmissibleInitialData: if the triple fails :func:`check_admissible`.
    """
    verdict = check_admissible(triple)
    if not verdict.admissible:
        raise InadmissibleInitialData(
            f"initial data {triple} violates the admissibility inequalities; "
            f"margins {verdict.margins}"
        )
    if u_max_request <= 0:
        raise ValueError("u_max_request must be positive")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")

    def rhs(u, y):
        kappa, dkappa, ddkappa, _ = y
        return np.array(
            [dkappa, ddkappa, kappa_rhs(kappa, dkappa, ddkappa), kappa]
        )

    def margin_kappa(u, y):
        return y[0] - epsilon_valid

    def margin_gauss(u, y):
        return y[1] + 1.0 + y[0] * y[0] - epsilon_valid

    def margin_mean(u, y):
        lower, _ = _ddkappa_bounds(y[0], y[1])
        return y[2] - lower - epsilon_valid

    def margin_conserved(u, y):
        _, upper = _ddkappa_bounds(y[0], y[1])
        return upper - y[2] - epsilon_valid

    events = [
        EventSpec(indicator=margin_kappa, direction="falling"),
        EventSpec(indicator=margin_gauss, direction="falling"),
        EventSpec(indicator=margin_mean, direction="falling"),
        EventSpec(indicator=margin_conserved, direction="falling"),
    ]

    y0 = np.array([triple.kappa0, triple.dkappa0, triple.ddkappa0, 0.0])
    problem = OdeProblem(
        dimension=4, rhs=rhs, u_start=0.0, u_end=u_max_request, initial_state=y0
    )
    traj = integrate(problem, rel_tol=rel_tol, abs_tol=abs_tol, events=events)

    if traj.event_u is not None:
        u_max = traj.event_u
        boundary_event = _EVENT_NAMES[traj.event_index]
        u_sample_end = u_max * (1.0 - BOUNDARY_INSET)
    else:
        u_max = u_max_request
        boundary_event = None
        u_sample_end = u_max * (1.0 - 1.0 / n_samples)

    c2_ref = conserved_c2(triple.kappa0, triple.dkappa0, triple.ddkappa0)
    us = np.linspace(0.0, u_sample_end, n_samples)
    samples = [_sample_at(u, *traj(u)) for u in us]
    drift = max(abs(s.c2 / c2_ref - 1.0) for s in samples)

    return IntrinsicSolution(
        triple=triple,
        samples=samples,
        u_max=float(u_max),
        c2_reference=float(c2_ref),
        c2_drift=float(drift),
        trajectory=traj,
        boundary_event=boundary_event,
    )


def f_from_K(K: float, c2: float, tol: float = 1e-13) -> float:
    """The unique positive mean curvature with 1 - 3f^2 - c^2 f^3 = K.

    h(x) = 1 - 3x^2 - c^2 x^3 is strictly decreasing on x > 0 and maps
    (0, inf) onto (-inf, 1), so a single positive root exists iff K < 1.

    Raises:
        ValueError: if K >= 1 or c2 <= 0.
    """
    if not K < 1.0:
        raise ValueError(f"no positive root exists for K = {K!r} >= 1")
    if c2 <= 0.0:
        raise ValueError("c2 must be positive")

    def h_minus_K(x):
        return 1.0 - 3.0 * x * x - c2 * x**3 - K

    hi = 1.0
    while h_minus_K(hi) > 0.0:
        hi *= 2.0
    return find_root(h_minus_K, (0.0, hi), tol=tol)


def to_f_chart(
    solution: Union[IntrinsicSolution, Sequence[IntrinsicSample]],
) -> list:
    """Reflect a run into the chart where the mean curvature increases.

    The reflection u -> -u swaps the orientation of the parameter line:
    geometric scalars (kappa, K, f_K, c^2) are carried over unchanged,
    odd-order derivatives flip sign, and the warp factor is re-normalized
    to the reflected chart (theta -> 1/theta keeps theta(0) = 1).
    Applying the operation twice returns the original sequence.
    """
    samples = solution.samples if isinstance(solution, IntrinsicSolution) else solution
    out = []
    for s in reversed(list(samples)):
        out.append(
            IntrinsicSample(
                u=-s.u,
                kappa=s.kappa,
                dkappa=-s.dkappa,
                ddkappa=s.ddkappa,
                theta=1.0 / s.theta,
                K=s.K,
                f_K=s.f_K,
                c2=s.c2,
            )
        )
    return out


def derive_profile_constants(sample: IntrinsicSample) -> tuple:
    """Constants (c, C) of the extrinsic pipeline read off one sample.

    c^2 is carried by the sample.  C^2 comes from evaluating the first
    integral of the mean-curvature ODE at the sample, using f' = 4 kappa f / 3
    (valid in the chart with increasing mean curvature, where
    kappa = 3 f' / (4 f)).
    """
    f = sample.f_K
    c2 = sample.c2
    fprime = 4.0 * sample.kappa * f / 3.0
    C2 = (
        fprime * fprime
        + (16.0 / 9.0) * f * f
        + 16.0 * f**4
        + (16.0 / 9.0) * c2 * f**5
    ) / (2.0 * f**3.5)
    return math.sqrt(c2), math.sqrt(C2)
