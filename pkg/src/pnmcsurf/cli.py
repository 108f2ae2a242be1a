"""Command line front end; a thin client of the HTTP service.

By default every computation is sent to the service in-process (the FastAPI
app is driven through an ASGI transport, no daemon required); ``--server``
points the same commands at a remote instance instead.  The CLI owns file
rendering: CSV, OBJ and report files are written client-side from the
service responses with fixed formatting, so identical invocations produce
byte-identical files.

Exit codes: 0 success / verification passed, 1 verification failed or
invalid parameters, 2 usage error.  Errors are printed to stderr with the
prefix ``error: ``.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import click

from . import __version__, io_formats
from .client import ServiceClient, ServiceError
from .errors import PnmcsurfError
from .verify import ReportEntry, VerificationReport


def _fail(message, code=1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


class _CliClient:
    """Wraps ServiceClient so request failures exit with the error prefix."""

    def __init__(self, server):
        self._client = ServiceClient(server=server)

    def post(self, path, payload):
        try:
            return self._client.post(path, payload)
        except ServiceError as exc:
            _fail(exc.detail)

    def get(self, path):
        try:
            return self._client.get(path)
        except ServiceError as exc:
            _fail(exc.detail)


def _echo_kv(key, value):
    click.echo(f"{key}: {value}")


def _parse_range(_ctx, _param, value):
    """'lo:hi:count' or a single value (count 1)."""
    if value is None:
        return None
    parts = value.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return {"lo": v, "hi": v, "count": 1}
        if len(parts) == 3:
            return {"lo": float(parts[0]), "hi": float(parts[1]), "count": int(parts[2])}
    except ValueError:
        pass
    raise click.BadParameter(f"expected 'lo:hi:count' or a single number, got {value!r}")


def _load_config(path):
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__)
@click.option("--server", envvar="PNMCSURF_SERVER", default=None, metavar="URL",
              help="Remote service URL; default runs the service in-process.")
@click.option("--config", "config_path", default=None, metavar="PATH",
              type=click.Path(exists=True, dir_okay=False),
              help="key=value file with defaults; explicit flags override it.")
@click.pass_context
def main(ctx, server, config_path):
    """Construct and verify PNMC biconservative surface patches in S^4."""
    if config_path:
        cfg = _load_config(config_path)
        ctx.default_map = {cmd: dict(cfg) for cmd in main.commands}
    ctx.obj = _CliClient(server=server)


_TRIPLE_OPTIONS = [
    click.option("--kappa0", type=float, required=True, help="kappa(0), must be > 0."),
    click.option("--dkappa0", type=float, required=True, help="kappa'(0)."),
    click.option("--ddkappa0", type=float, required=True, help="kappa''(0)."),
]

_TOL_OPTIONS = [
    click.option("--rel-tol", type=float, default=1e-10, show_default=True,
                 help="Integrator relative tolerance."),
    click.option("--abs-tol", type=float, default=1e-12, show_default=True,
                 help="Integrator absolute tolerance."),
]


def _add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


@main.command()
@_add_options(_TRIPLE_OPTIONS)
@click.pass_obj
def admissible(client, kappa0, dkappa0, ddkappa0):
    """Check initial curvature data against the strict inequalities.

    Exits 0 when admissible, 1 when not.
    """
    resp = client.post(
        "/admissible", {"kappa0": kappa0, "dkappa0": dkappa0, "ddkappa0": ddkappa0}
    )
    _echo_kv("admissible", "yes" if resp["admissible"] else "no")
    _echo_kv("margin kappa0 > 0", io_formats.fmt(resp["margin_kappa"]))
    _echo_kv("margin dkappa0 > -1 - kappa0^2", io_formats.fmt(resp["margin_gauss"]))
    _echo_kv(
        "ddkappa0 bounds",
        f"({io_formats.fmt(resp['ddkappa_lower'])}, {io_formats.fmt(resp['ddkappa_upper'])})",
    )
    _echo_kv("margin above lower bound", io_formats.fmt(resp["margin_mean_curvature"]))
    _echo_kv("margin below upper bound", io_formats.fmt(resp["margin_conserved"]))
    if not resp["admissible"]:
        sys.exit(1)


@main.command()
@_add_options(_TRIPLE_OPTIONS)
@click.option("--u-max", type=float, default=5.0, show_default=True,
              help="Requested parameter span; the validity window may stop earlier.")
@click.option("--n-samples", type=int, default=256, show_default=True)
@_add_options(_TOL_OPTIONS)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write samples as CSV (u, kappa, dkappa, ddkappa, theta, K, f_K, c2).")
@click.pass_obj
def intrinsic(client, kappa0, dkappa0, ddkappa0, u_max, n_samples, rel_tol, abs_tol, out):
    """Integrate the level-curvature ODE and report the derived constants."""
    resp = client.post(
        "/intrinsic",
        {
            "kappa0": kappa0, "dkappa0": dkappa0, "ddkappa0": ddkappa0,
            "u_max": u_max, "n_samples": n_samples,
            "rel_tol": rel_tol, "abs_tol": abs_tol,
        },
    )
    _echo_kv("u_max", io_formats.fmt(resp["u_max"]))
    _echo_kv("boundary event", resp["boundary_event"] or "none (request reached)")
    _echo_kv("c2", io_formats.fmt(resp["c2_reference"]))
    _echo_kv("c2 drift", io_formats.fmt(resp["c2_drift"]))
    _echo_kv("derived c", io_formats.fmt(resp["derived_c"]))
    _echo_kv("derived C", io_formats.fmt(resp["derived_C"]))
    if out:
        rows = ((s["u"], s["kappa"], s["dkappa"], s["ddkappa"], s["theta"],
                 s["K"], s["f_K"], s["c2"]) for s in resp["samples"])
        io_formats.write_csv(out, io_formats.INTRINSIC_CSV_HEADER, rows)
        _echo_kv("wrote", out)


@main.command()
@click.option("--c", "c_const", type=float, required=True, help="Constant c > 0.")
@click.option("--C", "C_const", type=float, required=True, help="Constant C > 0.")
@click.option("--f0", type=float, required=True,
              help="Mean curvature seed inside the positivity window.")
@click.option("--u-max", type=float, default=1.0, show_default=True)
@click.option("--n-samples", type=int, default=256, show_default=True)
@_add_options(_TOL_OPTIONS)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write samples as CSV (u, f, fprime, kappa, k, tau, kappa_hat, residuals).")
@click.pass_obj
def profile(client, c_const, C_const, f0, u_max, n_samples, rel_tol, abs_tol, out):
    """Integrate the mean-curvature profile f(u) with f' > 0."""
    resp = client.post(
        "/profile",
        {
            "c": c_const, "C": C_const, "f0": f0, "u_max": u_max,
            "n_samples": n_samples, "rel_tol": rel_tol, "abs_tol": abs_tol,
        },
    )
    _echo_kv("u_end", io_formats.fmt(resp["u_end"]))
    _echo_kv("stopped at turning guard", "yes" if resp["hit_turning_guard"] else "no")
    _echo_kv("window", f"({io_formats.fmt(resp['f_lo'])}, {io_formats.fmt(resp['f_hi'])})")
    if out:
        rows = ((s["u"], s["f"], s["fprime"], s["kappa"], s["k"], s["tau"],
                 s["kappa_hat"], s["residual_ode"], s["residual_fi"])
                for s in resp["samples"])
        io_formats.write_csv(out, io_formats.PROFILE_CSV_HEADER, rows)
        _echo_kv("wrote", out)


@main.command()
@click.option("--c", "c_const", type=float, required=True)
@click.option("--C", "C_const", type=float, required=True)
@click.option("--f0", type=float, required=True)
@click.option("--u-span", type=float, required=True,
              help="Parameter span of the patch (must stay short of the turning point).")
@click.option("--n-u", type=int, default=64, show_default=True)
@click.option("--n-t", type=int, default=64, show_default=True)
@click.option("--t-span", type=float, default=2.0 * math.pi, show_default=True,
              help="Angular extent of the circle direction.")
@click.option("--t-start", type=float, default=0.0, show_default=True)
@_add_options(_TOL_OPTIONS)
@click.option("--renormalize-every", type=float, default=None,
              help="Re-orthonormalize the frame at this parameter interval (long runs).")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Patch CSV path; a .meta.json sidecar is written next to it.")
@click.option("--meta", "meta_path", type=click.Path(dir_okay=False), default=None,
              help="Override the metadata sidecar path.")
@click.pass_obj
def surface(client, c_const, C_const, f0, u_span, n_u, n_t, t_span, t_start,
            rel_tol, abs_tol, renormalize_every, out, meta_path):
    """Build a surface patch and write its grid plus metadata sidecar."""
    resp = client.post(
        "/surface",
        {
            "c": c_const, "C": C_const, "f0": f0, "u_span": u_span,
            "n_u": n_u, "n_t": n_t, "t_span": t_span, "t_start": t_start,
            "rel_tol": rel_tol, "abs_tol": abs_tol,
            "renormalize_every": renormalize_every,
        },
    )
    patch = _patch_from_payload(resp["patch"])
    io_formats.write_patch_csv(patch, out)
    meta_path = meta_path or io_formats.default_meta_path(out)
    io_formats.write_patch_meta(patch, meta_path)
    _echo_kv("grid", f"{patch.n_u} x {patch.n_t}")
    _echo_kv("unit-norm defect", io_formats.fmt(resp["unit_norm_defect"]))
    _echo_kv("constraint defect", io_formats.fmt(resp["constraint_defect"]))
    _echo_kv("metric defects",
             f"g_uu {io_formats.fmt(resp['metric_g_uu'])}, "
             f"g_ut {io_formats.fmt(resp['metric_g_ut'])}, "
             f"g_tt*kappa_hat^2 {io_formats.fmt(resp['metric_g_tt_scaled'])}")
    _echo_kv("wrote", f"{out} {meta_path}")


def _patch_from_payload(payload):
    import numpy as np

    from .extrinsic import SurfacePatch

    return SurfacePatch(
        c=payload["c"],
        C=payload["C"],
        u_nodes=np.asarray(payload["u_nodes"], dtype=float),
        t_nodes=np.asarray(payload["t_nodes"], dtype=float),
        points=np.asarray(payload["points"], dtype=float),
        f_values=np.asarray(payload["f_values"], dtype=float),
        kappa_hat_values=np.asarray(payload["kappa_hat_values"], dtype=float),
        fprime_values=None
        if payload.get("fprime_values") is None
        else np.asarray(payload["fprime_values"], dtype=float),
    )


@main.command()
@click.option("--patch", "patch_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Patch CSV written by the surface command.")
@click.option("--meta", "meta_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Metadata sidecar (default: next to the CSV).")
@click.option("--level", type=click.Choice(["fast", "full"]), default="full",
              show_default=True)
@click.option("--stride", type=int, default=1, show_default=True,
              help="Finite-difference step in grid spacings.")
@click.option("--witness-floor", type=float, default=0.5, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the report to this file.")
@click.pass_obj
def verify(client, patch_path, meta_path, level, stride, witness_floor, report_path):
    """Independently verify a patch; exits 1 if any identity fails."""
    try:
        patch = io_formats.read_patch(patch_path, meta_path)
    except (PnmcsurfError, OSError, ValueError) as exc:
        _fail(str(exc))
    resp = client.post(
        "/verify",
        {
            "patch": {
                "c": patch.c,
                "C": patch.C,
                "u_nodes": patch.u_nodes.tolist(),
                "t_nodes": patch.t_nodes.tolist(),
                "points": patch.points.tolist(),
                "f_values": patch.f_values.tolist(),
                "kappa_hat_values": patch.kappa_hat_values.tolist(),
                "fprime_values": None
                if patch.fprime_values is None
                else patch.fprime_values.tolist(),
            },
            "level": level,
            "stride": stride,
            "witness_floor": witness_floor,
        },
    )
    report = VerificationReport(
        entries=[
            ReportEntry(
                name=e["name"],
                max=math.nan if e["max"] is None else e["max"],
                mean=math.nan if e["mean"] is None else e["mean"],
                tol=e["tol"],
                passed=e["passed"],
            )
            for e in resp["entries"]
        ],
        level=resp["level"],
        stride=resp["stride"],
    )
    text = io_formats.render_report(report)
    click.echo(text, nl=False)
    if report_path:
        Path(report_path).write_text(text)
    if not resp["overall"]:
        sys.exit(1)


@main.command("scan-triples")
@click.option("--kappa0", callback=_parse_range, required=True, metavar="LO:HI:N",
              help="Range for kappa(0).")
@click.option("--dkappa0", callback=_parse_range, required=True, metavar="LO:HI:N")
@click.option("--ddkappa0", callback=_parse_range, required=True, metavar="LO:HI:N")
@click.option("--u-probe", type=float, default=1.0, show_default=True,
              help="Cap on the probed validity interval per admissible cell.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
def scan_triples(client, kappa0, dkappa0, ddkappa0, u_probe, out):
    """Map admissibility, validity span and constants over a triple grid."""
    resp = client.post(
        "/scan/triples",
        {"kappa0": kappa0, "dkappa0": dkappa0, "ddkappa0": ddkappa0, "u_probe": u_probe},
    )
    rows = (
        (r["kappa0"], r["dkappa0"], r["ddkappa0"], r["admissible"], r["margin_kappa"],
         r["margin_gauss"], r["margin_mean_curvature"], r["margin_conserved"],
         r["u_max"], r["c2"], r["C2"], r["status"])
        for r in resp["rows"]
    )
    io_formats.write_csv(out, io_formats.TRIPLES_CSV_HEADER, rows)
    admissible_count = sum(1 for r in resp["rows"] if r["admissible"])
    _echo_kv("cells", str(len(resp["rows"])))
    _echo_kv("admissible", str(admissible_count))
    _echo_kv("wrote", out)


@main.command("scan-windows")
@click.option("--c", "c_range", callback=_parse_range, required=True, metavar="LO:HI:N")
@click.option("--C", "C_range", callback=_parse_range, required=True, metavar="LO:HI:N")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
def scan_windows(client, c_range, C_range, out):
    """Map the positivity window of the profile polynomial over (c, C)."""
    resp = client.post("/scan/windows", {"c": c_range, "C": C_range})
    rows = (
        (r["c"], r["C"], r["has_window"], r["f_lo"], r["f_hi"], r["width"])
        for r in resp["rows"]
    )
    io_formats.write_csv(out, io_formats.WINDOWS_CSV_HEADER, rows)
    _echo_kv("cells", str(len(resp["rows"])))
    _echo_kv("windows", str(sum(1 for r in resp["rows"] if r["has_window"])))
    _echo_kv("wrote", out)


@main.command("export-obj")
@click.option("--patch", "patch_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--proj", default="x1,x3,x4", show_default=True,
              help="Three coordinates for the orthogonal projection to 3-space.")
def export_obj(patch_path, out, proj):
    """Export a patch CSV as a quad-mesh OBJ (eyeballing only; CSV is the record)."""
    try:
        axes = io_formats.parse_projection(proj)
        u_nodes, t_nodes, points = io_formats.read_patch_points(patch_path)
        io_formats.write_obj(u_nodes, t_nodes, points, out, proj=axes)
    except (PnmcsurfError, OSError, ValueError) as exc:
        _fail(str(exc))
    _echo_kv("wrote", out)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
