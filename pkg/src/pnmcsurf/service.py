"""HTTP service exposing the construction and verification pipelines.

Every operation is a pure request/response computation, so the service is
stateless and safe to scale horizontally.  Payload floats survive the JSON
round trip exactly (both ends use shortest-repr doubles), which keeps the
thin CLI client byte-deterministic.  Domain errors surface as 422 responses
with the error message in ``detail``.
"""

from __future__ import annotations

import math
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, extrinsic, intrinsic, profile, scan, verify
from .errors import PnmcsurfError
from .odecore import DEFAULT_ABS_TOL, DEFAULT_REL_TOL

app = FastAPI(
    title="pnmcsurf",
    version=__version__,
    description=(
        "Constructs PNMC biconservative surface patches in the unit 4-sphere "
        "and verifies their geometry independently."
    ),
)


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


class HealthResponse(BaseModel):
    status: str
    version: str


class TripleModel(BaseModel):
    kappa0: float
    dkappa0: float
    ddkappa0: float


class AdmissibleResponse(BaseModel):
    admissible: bool
    margin_kappa: float
    margin_gauss: float
    margin_mean_curvature: float
    margin_conserved: float
    ddkappa_lower: float
    ddkappa_upper: float


class IntrinsicRequest(TripleModel):
    u_max: float = 5.0
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    n_samples: int = Field(default=256, ge=2, le=100_000)


class IntrinsicSampleModel(BaseModel):
    u: float
    kappa: float
    dkappa: float
    ddkappa: float
    theta: float
    K: float
    f_K: float
    c2: float


class IntrinsicResponse(BaseModel):
    u_max: float
    boundary_event: Optional[str]
    c2_reference: float
    c2_drift: float
    derived_c: float
    derived_C: float
    samples: List[IntrinsicSampleModel]


class ProfileRequest(BaseModel):
    c: float
    C: float
    f0: float
    u_max: float = 1.0
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    n_samples: int = Field(default=256, ge=2, le=100_000)


class ProfileSampleModel(BaseModel):
    u: float
    f: float
    fprime: float
    kappa: float
    k: float
    tau: float
    kappa_hat: float
    residual_ode: float
    residual_fi: float


class ProfileResponse(BaseModel):
    u_end: float
    hit_turning_guard: bool
    f_lo: float
    f_hi: float
    samples: List[ProfileSampleModel]


class WindowRequest(BaseModel):
    c: float
    C: float
    f_seed: float


class WindowResponse(BaseModel):
    f_lo: float
    f_hi: float
    width: float


class SurfaceRequest(BaseModel):
    c: float
    C: float
    f0: float
    u_span: float
    n_u: int = Field(default=64, ge=4, le=4096)
    n_t: int = Field(default=64, ge=4, le=4096)
    t_span: float = 2.0 * math.pi
    t_start: float = 0.0
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    renormalize_every: Optional[float] = None


class PatchPayload(BaseModel):
    c: float
    C: float
    u_nodes: List[float]
    t_nodes: List[float]
    points: List[List[List[float]]]
    f_values: List[float]
    kappa_hat_values: List[float]
    fprime_values: Optional[List[float]] = None


class SurfaceResponse(BaseModel):
    patch: PatchPayload
    unit_norm_defect: float
    constraint_defect: float
    metric_g_uu: float
    metric_g_ut: float
    metric_g_tt_scaled: float


class VerifyRequest(BaseModel):
    patch: PatchPayload
    level: str = "full"
    stride: int = Field(default=1, ge=1, le=64)
    witness_floor: float = verify.WITNESS_FLOOR


class ReportEntryModel(BaseModel):
    name: str
    max: Optional[float]
    mean: Optional[float]
    tol: float
    passed: bool


class VerifyResponse(BaseModel):
    overall: bool
    level: str
    stride: int
    entries: List[ReportEntryModel]


class RangeModel(BaseModel):
    lo: float
    hi: float
    count: int = Field(ge=0, le=10_000)


class TripleScanRequest(BaseModel):
    kappa0: RangeModel
    dkappa0: RangeModel
    ddkappa0: RangeModel
    u_probe: float = scan.DEFAULT_U_PROBE


class TripleCellModel(BaseModel):
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


class TripleScanResponse(BaseModel):
    rows: List[TripleCellModel]


class WindowScanRequest(BaseModel):
    c: RangeModel
    C: RangeModel


class WindowCellModel(BaseModel):
    c: float
    C: float
    has_window: bool
    f_lo: Optional[float]
    f_hi: Optional[float]
    width: Optional[float]


class WindowScanResponse(BaseModel):
    rows: List[WindowCellModel]


def _patch_to_payload(patch: extrinsic.SurfacePatch) -> PatchPayload:
    return PatchPayload(
        c=patch.c,
        C=patch.C,
        u_nodes=patch.u_nodes.tolist(),
        t_nodes=patch.t_nodes.tolist(),
        points=patch.points.tolist(),
        f_values=patch.f_values.tolist(),
        kappa_hat_values=patch.kappa_hat_values.tolist(),
        fprime_values=None
        if patch.fprime_values is None
        else patch.fprime_values.tolist(),
    )


def _payload_to_patch(payload: PatchPayload) -> extrinsic.SurfacePatch:
    return extrinsic.SurfacePatch(
        c=payload.c,
        C=payload.C,
        u_nodes=np.asarray(payload.u_nodes, dtype=float),
        t_nodes=np.asarray(payload.t_nodes, dtype=float),
        points=np.asarray(payload.points, dtype=float),
        f_values=np.asarray(payload.f_values, dtype=float),
        kappa_hat_values=np.asarray(payload.kappa_hat_values, dtype=float),
        fprime_values=None
        if payload.fprime_values is None
        else np.asarray(payload.fprime_values, dtype=float),
    )


def _domain(call):
    try:
        return call()
    except (PnmcsurfError, ValueError, ZeroDivisionError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(status="ok", version=__version__)


@app.post("/admissible", response_model=AdmissibleResponse)
def admissible(req: TripleModel):
    def run():
        triple = intrinsic.InitialTriple(req.kappa0, req.dkappa0, req.ddkappa0)
        return intrinsic.check_admissible(triple)

    v = _domain(run)
    return AdmissibleResponse(
        admissible=v.admissible,
        margin_kappa=v.margin_kappa,
        margin_gauss=v.margin_gauss,
        margin_mean_curvature=v.margin_mean_curvature,
        margin_conserved=v.margin_conserved,
        ddkappa_lower=v.ddkappa_lower,
        ddkappa_upper=v.ddkappa_upper,
    )


@app.post("/intrinsic", response_model=IntrinsicResponse)
def intrinsic_run(req: IntrinsicRequest):
    def run():
        triple = intrinsic.InitialTriple(req.kappa0, req.dkappa0, req.ddkappa0)
        sol = intrinsic.integrate_intrinsic(
            triple,
            u_max_request=req.u_max,
            rel_tol=req.rel_tol,
            abs_tol=req.abs_tol,
            n_samples=req.n_samples,
        )
        reflected = intrinsic.to_f_chart(sol)
        c, C = intrinsic.derive_profile_constants(reflected[-1])
        return sol, c, C

    sol, c, C = _domain(run)
    return IntrinsicResponse(
        u_max=sol.u_max,
        boundary_event=sol.boundary_event,
        c2_reference=sol.c2_reference,
        c2_drift=sol.c2_drift,
        derived_c=c,
        derived_C=C,
        samples=[IntrinsicSampleModel(**vars(s)) for s in sol.samples],
    )


@app.post("/profile", response_model=ProfileResponse)
def profile_run(req: ProfileRequest):
    def run():
        params = profile.ModelParams(
            c=req.c, C=req.C, rel_tol=req.rel_tol, abs_tol=req.abs_tol
        )
        return profile.integrate_profile(
            params, req.f0, u_max_request=req.u_max, n_samples=req.n_samples
        )

    run_result = _domain(run)
    return ProfileResponse(
        u_end=run_result.u_end,
        hit_turning_guard=run_result.hit_turning_guard,
        f_lo=run_result.window.f_lo,
        f_hi=run_result.window.f_hi,
        samples=[ProfileSampleModel(**vars(s)) for s in run_result.samples],
    )


@app.post("/window", response_model=WindowResponse)
def window(req: WindowRequest):
    def run():
        params = profile.ModelParams(c=req.c, C=req.C)
        return profile.admissible_window(params, req.f_seed)

    w = _domain(run)
    return WindowResponse(f_lo=w.f_lo, f_hi=w.f_hi, width=w.width)


@app.post("/surface", response_model=SurfaceResponse)
def surface(req: SurfaceRequest):
    def run():
        params = profile.ModelParams(
            c=req.c, C=req.C, rel_tol=req.rel_tol, abs_tol=req.abs_tol
        )
        patch = extrinsic.sample_patch(
            params,
            req.f0,
            u_span=req.u_span,
            n_u=req.n_u,
            n_t=req.n_t,
            t_span=req.t_span,
            t_start=req.t_start,
            renormalize_every=req.renormalize_every,
        )
        defects = extrinsic.metric_defects(patch)
        return patch, defects

    patch, defects = _domain(run)
    return SurfaceResponse(
        patch=_patch_to_payload(patch),
        unit_norm_defect=patch.unit_norm_defect(),
        constraint_defect=extrinsic.constraint_defect(patch),
        metric_g_uu=defects["g_uu"],
        metric_g_ut=defects["g_ut"],
        metric_g_tt_scaled=defects["g_tt_scaled"],
    )


@app.post("/verify", response_model=VerifyResponse)
def verify_run(req: VerifyRequest):
    def run():
        patch = _payload_to_patch(req.patch)
        return verify.verify_patch(
            patch, level=req.level, stride=req.stride, witness_floor=req.witness_floor
        )

    report = _domain(run)
    return VerifyResponse(
        overall=report.overall,
        level=report.level,
        stride=report.stride,
        entries=[
            ReportEntryModel(
                name=e.name,
                max=_finite_or_none(e.max),
                mean=_finite_or_none(e.mean),
                tol=e.tol,
                passed=e.passed,
            )
            for e in report.entries
        ],
    )


@app.post("/scan/triples", response_model=TripleScanResponse)
def scan_triples(req: TripleScanRequest):
    def run():
        return scan.scan_triples(
            kappa0=scan.RangeSpec(**req.kappa0.model_dump()),
            dkappa0=scan.RangeSpec(**req.dkappa0.model_dump()),
            ddkappa0=scan.RangeSpec(**req.ddkappa0.model_dump()),
            u_probe=req.u_probe,
        )

    rows = _domain(run)
    return TripleScanResponse(rows=[TripleCellModel(**vars(r)) for r in rows])


@app.post("/scan/windows", response_model=WindowScanResponse)
def scan_windows(req: WindowScanRequest):
    def run():
        return scan.scan_windows(
            c=scan.RangeSpec(**req.c.model_dump()),
            C=scan.RangeSpec(**req.C.model_dump()),
        )

    rows = _domain(run)
    return WindowScanResponse(rows=[WindowCellModel(**vars(r)) for r in rows])
