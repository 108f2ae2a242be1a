"""Parameter-family maps: admissible initial data and profile windows.

The constructions are indexed two ways: by initial curvature triples
(kappa0, kappa0', kappa0'') subject to strict inequalities, and by the
constants (c, C) through the positivity window of the profile polynomial.
The scans grid both parametrizations, one row per cell.  Cells are
independent; a cell that cannot be completed reports its own status rather
than raising, so batch maps survive individual failures.  Iteration order is
fixed (outer to inner in argument order) and results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import intrinsic
from .errors import PnmcsurfError
from .profile import ModelParams, positivity_window

DEFAULT_U_PROBE = 1.0


@dataclass(frozen=True)
class RangeSpec:
    """Inclusive parameter range with a point count; count 1 pins ``lo``."""

    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.count > 1 and not self.hi > self.lo:
            raise ValueError("hi must exceed lo for multi-point ranges")

    def values(self):
        if self.count == 0:
            return np.empty(0)
        if self.count == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class TripleCell:
    kappa0: float
    dkappa0: float
    ddkappa0: float
    admissible: bool
    margin_kappa: float
    margin_gauss: float
    margin_mean_curvature: float
    margin_conserved: float
    u_max: Optional[float]
    c2: Optional[float]
    C2: Optional[float]
    status: str


@dataclass(frozen=True)
class WindowCell:
    c: float
    C: float
    has_window: bool
    f_lo: Optional[float]
    f_hi: Optional[float]
    width: Optional[float]


def scan_triples(
    kappa0: RangeSpec,
    dkappa0: RangeSpec,
    ddkappa0: RangeSpec,
    u_probe: float = DEFAULT_U_PROBE,
    rel_tol: float = None,
    abs_tol: float = None,
) -> list:
    """Grid the initial-data space; admissible cells get u_max and (c^2, C^2).

    u_max is the detected validity interval capped at ``u_probe``.  The
    constants come from closed forms at u = 0, so they are reported even if
    probing the interval fails; such cells carry a non-ok status.
    """
    kwargs = {}
    if rel_tol is not None:
        kwargs["rel_tol"] = rel_tol
    if abs_tol is not None:
        kwargs["abs_tol"] = abs_tol

    rows = []
    for k0 in kappa0.values():
        for dk0 in dkappa0.values():
            for ddk0 in ddkappa0.values():
                triple = intrinsic.InitialTriple(float(k0), float(dk0), float(ddk0))
                verdict = intrinsic.check_admissible(triple)
                base = dict(
                    kappa0=triple.kappa0,
                    dkappa0=triple.dkappa0,
                    ddkappa0=triple.ddkappa0,
                    admissible=verdict.admissible,
                    margin_kappa=verdict.margin_kappa,
                    margin_gauss=verdict.margin_gauss,
                    margin_mean_curvature=verdict.margin_mean_curvature,
                    margin_conserved=verdict.margin_conserved,
                )
                if not verdict.admissible:
                    rows.append(
                        TripleCell(
                            **base, u_max=None, c2=None, C2=None, status="inadmissible"
                        )
                    )
                    continue

                c2 = intrinsic.conserved_c2(
                    triple.kappa0, triple.dkappa0, triple.ddkappa0
                )
                sample0 = intrinsic.IntrinsicSample(
                    u=0.0,
                    kappa=triple.kappa0,
                    dkappa=triple.dkappa0,
                    ddkappa=triple.ddkappa0,
                    theta=1.0,
                    K=intrinsic.gauss_curvature(triple.kappa0, triple.dkappa0),
                    f_K=math.sqrt(
                        intrinsic.mean_curvature_squared(
                            triple.kappa0, triple.dkappa0, triple.ddkappa0
                        )
                    ),
                    c2=c2,
                )
                _, C = intrinsic.derive_profile_constants(sample0)
                try:
                    sol = intrinsic.integrate_intrinsic(
                        triple, u_max_request=u_probe, **kwargs
                    )
                    u_max, status = sol.u_max, "ok"
                except PnmcsurfError as exc:
                    u_max, status = None, f"integration_error: {exc}"
                rows.append(
                    TripleCell(**base, u_max=u_max, c2=c2, C2=C * C, status=status)
                )
    return rows


def scan_windows(c: RangeSpec, C: RangeSpec) -> list:
    """Grid the (c, C) plane; each cell reports its positivity window."""
    rows = []
    for cv in c.values():
        for Cv in C.values():
            params = ModelParams(c=float(cv), C=float(Cv))
            endpoints = positivity_window(params)
            if endpoints is None:
                rows.append(
                    WindowCell(
                        c=params.c, C=params.C, has_window=False,
                        f_lo=None, f_hi=None, width=None,
                    )
                )
            else:
                f_lo, f_hi = endpoints
                rows.append(
                    WindowCell(
                        c=params.c, C=params.C, has_window=True,
                        f_lo=f_lo, f_hi=f_hi, width=f_hi - f_lo,
                    )
                )
    return rows
