"""Deterministic file formats: CSV, patch metadata, OBJ export, reports.

All numeric output is rendered with 15 significant digits, '.' decimal
separator and no timestamps, so identical runs produce byte-identical files.
Patch data splits into two files: the CSV of grid points (columns i, j, u, t,
x1..x5, the data of record) and a JSON sidecar with the construction
metadata (c, C, per-row f and kappa_hat) that independent verification is
allowed to consume.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import VerificationInputError
from .extrinsic import SurfacePatch
from .verify import VerificationReport

PATCH_CSV_HEADER = ["i", "j", "u", "t", "x1", "x2", "x3", "x4", "x5"]
INTRINSIC_CSV_HEADER = ["u", "kappa", "dkappa", "ddkappa", "theta", "K", "f_K", "c2"]
PROFILE_CSV_HEADER = [
    "u", "f", "fprime", "kappa", "k", "tau", "kappa_hat", "residual_ode", "residual_fi",
]
TRIPLES_CSV_HEADER = [
    "kappa0", "dkappa0", "ddkappa0", "admissible", "margin_kappa", "margin_gauss",
    "margin_mean_curvature", "margin_conserved", "u_max", "c2", "C2", "status",
]
WINDOWS_CSV_HEADER = ["c", "C", "has_window", "f_lo", "f_hi", "width"]


def fmt(value) -> str:
    """Render one scalar for CSV/report output (15 significant digits)."""
    if value is None:
        return "nan"
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".15g")


def write_csv(path, header, rows) -> None:
    """Write rows of scalars with a mandatory header, LF newlines."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def intrinsic_rows(samples):
    for s in samples:
        yield (s.u, s.kappa, s.dkappa, s.ddkappa, s.theta, s.K, s.f_K, s.c2)


def profile_rows(samples):
    for s in samples:
        yield (s.u, s.f, s.fprime, s.kappa, s.k, s.tau, s.kappa_hat,
               s.residual_ode, s.residual_fi)


def triple_rows(cells):
    for c in cells:
        yield (c.kappa0, c.dkappa0, c.ddkappa0, c.admissible, c.margin_kappa,
               c.margin_gauss, c.margin_mean_curvature, c.margin_conserved,
               c.u_max, c.c2, c.C2, c.status)


def window_rows(cells):
    for c in cells:
        yield (c.c, c.C, c.has_window, c.f_lo, c.f_hi, c.width)


def patch_rows(patch: SurfacePatch):
    for i, u in enumerate(patch.u_nodes):
        for j, t in enumerate(patch.t_nodes):
            x = patch.points[i, j]
            yield (i, j, u, t, x[0], x[1], x[2], x[3], x[4])


def write_patch_csv(patch: SurfacePatch, path) -> None:
    write_csv(path, PATCH_CSV_HEADER, patch_rows(patch))


def default_meta_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(".meta.json") if p.suffix == ".csv" else Path(str(p) + ".meta.json")


def patch_meta(patch: SurfacePatch) -> dict:
    meta = {
        "c": patch.c,
        "C": patch.C,
        "n_u": int(patch.n_u),
        "n_t": int(patch.n_t),
        "u_nodes": [float(v) for v in patch.u_nodes],
        "t_nodes": [float(v) for v in patch.t_nodes],
        "f_values": [float(v) for v in patch.f_values],
        "kappa_hat_values": [float(v) for v in patch.kappa_hat_values],
    }
    if patch.fprime_values is not None:
        meta["fprime_values"] = [float(v) for v in patch.fprime_values]
    return meta


def write_patch_meta(patch: SurfacePatch, path) -> None:
    # json round-trips doubles exactly (repr-based), so the sidecar loses
    # no precision against the in-memory patch.
    with open(path, "w") as fh:
        json.dump(patch_meta(patch), fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_patch_points(csv_path):
    """Grid (u_nodes, t_nodes, points) from a patch CSV alone."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PATCH_CSV_HEADER:
            raise VerificationInputError(
                f"{csv_path}: expected patch CSV header {PATCH_CSV_HEADER}, got {header}"
            )
        rows = [(int(r[0]), int(r[1]), [float(v) for v in r[2:9]]) for r in reader]
    if not rows:
        raise VerificationInputError(f"{csv_path}: no data rows")
    n_u = max(r[0] for r in rows) + 1
    n_t = max(r[1] for r in rows) + 1
    if len(rows) != n_u * n_t:
        raise VerificationInputError(
            f"{csv_path}: grid is not complete ({len(rows)} rows for {n_u} x {n_t})"
        )
    u_nodes = np.full(n_u, np.nan)
    t_nodes = np.full(n_t, np.nan)
    points = np.full((n_u, n_t, 5), np.nan)
    for i, j, vals in rows:
        u_nodes[i] = vals[0]
        t_nodes[j] = vals[1]
        points[i, j] = vals[2:]
    return u_nodes, t_nodes, points


def read_patch(csv_path, meta_path=None) -> SurfacePatch:
    """Rebuild a SurfacePatch from its CSV and metadata sidecar."""
    u_nodes, t_nodes, points = read_patch_points(csv_path)
    meta_path = Path(meta_path) if meta_path else default_meta_path(csv_path)
    if not meta_path.exists():
        raise VerificationInputError(
            f"patch metadata {meta_path} not found; verification needs the "
            "(c, C, f) sidecar written alongside the CSV"
        )
    with open(meta_path) as fh:
        meta = json.load(fh)
    fprime = meta.get("fprime_values")
    return SurfacePatch(
        c=float(meta["c"]),
        C=float(meta["C"]),
        u_nodes=u_nodes,
        t_nodes=t_nodes,
        points=points,
        f_values=np.asarray(meta["f_values"], dtype=float),
        kappa_hat_values=np.asarray(meta["kappa_hat_values"], dtype=float),
        fprime_values=None if fprime is None else np.asarray(fprime, dtype=float),
    )


def render_report(report: VerificationReport) -> str:
    """One entry per line, fixed order, machine-readable and diff-stable."""
    lines = [
        f"name={e.name} max={fmt(e.max)} mean={fmt(e.mean)} tol={fmt(e.tol)} "
        f"pass={1 if e.passed else 0}"
        for e in report.entries
    ]
    lines.append(f"overall pass={1 if report.overall else 0}")
    return "\n".join(lines) + "\n"


_PROJ_AXES = {"x1": 0, "x2": 1, "x3": 2, "x4": 3, "x5": 4}


def parse_projection(spec: str):
    """Projection spec 'x1,x3,x4' to coordinate indices."""
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 3 or any(p not in _PROJ_AXES for p in parts):
        raise ValueError(
            f"projection must name three of {sorted(_PROJ_AXES)}, got {spec!r}"
        )
    return tuple(_PROJ_AXES[p] for p in parts)


def write_obj(u_nodes, t_nodes, points, path, proj=(0, 2, 3)) -> None:
    """Quad mesh over the grid, orthogonally projected to three coordinates.

    When the t nodes cover a full turn (half-open grid), the seam is closed
    with wrap-around quads.
    """
    n_u, n_t = len(u_nodes), len(t_nodes)
    lines = ["# pnmcsurf patch export", f"# projection axes {proj}"]
    for i in range(n_u):
        for j in range(n_t):
            x = points[i, j]
            lines.append(f"v {fmt(x[proj[0]])} {fmt(x[proj[1]])} {fmt(x[proj[2]])}")

    def vid(i, j):
        return i * n_t + j + 1

    closed = False
    if n_t > 2:
        dt = t_nodes[1] - t_nodes[0]
        closed = abs(n_t * dt - 2.0 * math.pi) < 1e-9
    j_pairs = [(j, j + 1) for j in range(n_t - 1)]
    if closed:
        j_pairs.append((n_t - 1, 0))
    for i in range(n_u - 1):
        for j0, j1 in j_pairs:
            lines.append(
                f"f {vid(i, j0)} {vid(i + 1, j0)} {vid(i + 1, j1)} {vid(i, j1)}"
            )
    Path(path).write_text("\n".join(lines) + "\n")
