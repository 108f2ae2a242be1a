"""Adaptive Runge-Kutta integration with dense output, events and root finding.

Thin, contract-enforcing wrapper around :func:`scipy.integrate.solve_ivp`
(embedded Dormand-Prince 5(4) pair with a quartic dense-output interpolant)
and :func:`scipy.optimize.brentq`.  Every pipeline in this package runs on
these two entry points, so tolerances and event semantics are fixed here once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import BracketError, IntegrationError

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-12


@dataclass(frozen=True)
class OdeProblem:
    """First-order system y' = rhs(u, y) on the interval [u_start, u_end]."""

    dimension: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    u_start: float
    u_end: float
    initial_state: np.ndarray

    def __post_init__(self):
        state = np.asarray(self.initial_state, dtype=float)
        object.__setattr__(self, "initial_state", state)
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if state.shape != (self.dimension,):
            raise ValueError(
                f"initial_state has shape {state.shape}, expected ({self.dimension},)"
            )
        if self.u_start == self.u_end:
            raise ValueError("u_start and u_end must differ")


@dataclass(frozen=True)
class EventSpec:
    """Scalar event indicator with an optional crossing direction.

    direction:
        "any"     stop on any sign change,
        "rising"  stop only when the indicator crosses zero upward,
        "falling" stop only when it crosses zero downward.
    """

    indicator: Callable[[float, np.ndarray], float]
    direction: str = "any"

    def __post_init__(self):
        if self.direction not in ("any", "rising", "falling"):
            raise ValueError(f"unknown event direction {self.direction!r}")


@dataclass
class Trajectory:
    """Integration result: accepted nodes, states and a dense interpolant."""

    nodes: np.ndarray
    states: np.ndarray
    interpolant: Callable[[float], np.ndarray]
    event_u: Optional[float] = None
    event_index: Optional[int] = None
    u_end: float = field(init=False)

    def __post_init__(self):
        self.u_end = float(self.nodes[-1])

    def __call__(self, u):
        """Evaluate the dense output; scalar u gives a state vector."""
        return np.asarray(self.interpolant(u), dtype=float)


def _wrap_rhs(rhs):
    def checked(u, y):
        dy = np.asarray(rhs(u, y), dtype=float)
        if not np.all(np.isfinite(dy)):
            raise IntegrationError(
                f"right-hand side returned a non-finite value at u={u!r}", u_last=u
            )
        return dy

    return checked


_DIRECTION_FLAG = {"any": 0.0, "rising": 1.0, "falling": -1.0}


def integrate(
    problem: OdeProblem,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    events: Sequence[EventSpec] = (),
    max_step: float = np.inf,
    first_step: Optional[float] = None,
) -> Trajectory:
    """Integrate an :class:`OdeProblem`, stopping at the first event if any fires.

    Local error per accepted step is kept below ``abs_tol + rel_tol * |y|``
    by the embedded pair.  Event roots are polished on the dense output to
    bracketing precision far below ``abs_tol``.

    Raises:
        IntegrationError: on step-size underflow or a non-finite right-hand
            side; the exception carries the last valid u.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")

    scipy_events = []
    for spec in events:
        def make(spec):
            def g(u, y):
                return spec.indicator(u, y)

            g.terminal = True
            g.direction = _DIRECTION_FLAG[spec.direction]
            return g

        scipy_events.append(make(spec))

    sol = solve_ivp(
        _wrap_rhs(problem.rhs),
        (problem.u_start, problem.u_end),
        problem.initial_state,
        method="RK45",
        rtol=rel_tol,
        atol=abs_tol,
        dense_output=True,
        events=scipy_events or None,
        max_step=max_step,
        first_step=first_step,
    )
    if sol.status == -1:
        u_last = float(sol.t[-1]) if sol.t.size else problem.u_start
        raise IntegrationError(sol.message, u_last=u_last)

    event_u = None
    event_index = None
    if sol.status == 1:
        for idx, hits in enumerate(sol.t_events):
            if hits.size:
                event_u = float(hits[0])
                event_index = idx
                break

    return Trajectory(
        nodes=sol.t.copy(),
        states=sol.y.T.copy(),
        interpolant=sol.sol,
        event_u=event_u,
        event_index=event_index,
    )


def find_root(
    f: Callable[[float], float],
    bracket: Sequence[float],
    tol: float = 1e-13,
) -> float:
    """Locate a root of a continuous scalar function inside a sign-change bracket.

    Uses Brent's method, which keeps a shrinking bracket at every iteration,
    so convergence to width <= tol is guaranteed for continuous f.

    Raises:
        BracketError: if f has the same strict sign at both endpoints.
    """
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise BracketError(
            f"no sign change on [{a!r}, {b!r}]: f(a)={fa!r}, f(b)={fb!r}"
        )
    return float(brentq(f, a, b, xtol=tol, rtol=4.0 * np.finfo(float).eps))
