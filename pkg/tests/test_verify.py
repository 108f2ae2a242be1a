import math

import numpy as np
import pytest

from conftest import ANCHOR_F0
from pnmcsurf.errors import VerificationInputError
from pnmcsurf.extrinsic import SurfacePatch, sample_patch
from pnmcsurf.verify import (
    build_geometry,
    local_geometry,
    verify_patch,
)

# entries whose residual is dominated by second-order truncation on the
# reference patch; these are the ones the step-halving ratio applies to
CONVERGENT_ENTRIES = [
    "fd_metric_guu",
    "f_rel",
    "shape_A3_spectrum",
    "recovered_c",
    "biconservativity",
    "gauss_K_intrinsic",
    "gauss_K_extrinsic",
    "recovered_C",
]


def perturbed_copy(patch, i, j, delta=1e-2, axis=0):
    points = patch.points.copy()
    points[i, j, axis] += delta
    return SurfacePatch(
        c=patch.c,
        C=patch.C,
        u_nodes=patch.u_nodes,
        t_nodes=patch.t_nodes,
        points=points,
        f_values=patch.f_values,
        kappa_hat_values=patch.kappa_hat_values,
    )


class TestLocalGeometry:
    def test_tangency_and_frames(self, reference_patch):
        du = reference_patch.u_nodes[1] - reference_patch.u_nodes[0]
        geom = local_geometry(reference_patch, 30, 30, h_fd=du)
        assert abs(geom.phi @ geom.phi_u) <= 1e-8
        assert abs(geom.phi @ geom.phi_t) <= 1e-8
        assert abs(geom.normal1 @ geom.normal1 - 1.0) <= 1e-12
        assert abs(geom.normal1 @ geom.normal2) <= 1e-12
        assert abs(geom.normal1 @ geom.phi_u) <= 1e-8
        assert abs(geom.normal2 @ geom.phi_t) <= 1e-8

    def test_metric_close_to_chart_form(self, reference_patch):
        du = reference_patch.u_nodes[1] - reference_patch.u_nodes[0]
        geom = local_geometry(reference_patch, 20, 25, h_fd=du)
        assert abs(geom.metric[0, 0] - 1.0) <= 1e-5
        assert abs(geom.metric[0, 1]) <= 1e-6

    def test_fine_spacing_meets_tight_budgets(self, anchor_params):
        # with h close to 1e-3 the measured f is within 1e-3 relative and
        # g_uu within 1e-6
        patch = sample_patch(
            anchor_params, ANCHOR_F0, u_span=0.127, n_u=128, n_t=128, t_span=0.127
        )
        geom = local_geometry(patch, 60, 60, h_fd=1e-3)
        assert abs(geom.metric[0, 0] - 1.0) <= 1e-6
        rel = abs(geom.f_measured - patch.f_values[60]) / patch.f_values[60]
        assert rel <= 1e-3

    def test_boundary_index_rejected(self, reference_patch):
        du = reference_patch.u_nodes[1] - reference_patch.u_nodes[0]
        with pytest.raises(VerificationInputError):
            local_geometry(reference_patch, 1, 30, h_fd=du)
        with pytest.raises(VerificationInputError):
            local_geometry(reference_patch, 30, 63, h_fd=du)

    def test_unresolvable_step_rejected(self, reference_patch):
        du = reference_patch.u_nodes[1] - reference_patch.u_nodes[0]
        with pytest.raises(VerificationInputError):
            local_geometry(reference_patch, 30, 30, h_fd=0.1 * du)

    def test_degenerate_metric_rejected(self, reference_patch):
        # collapse the t direction: every t row holds the same points, so
        # the induced metric is singular
        flat = SurfacePatch(
            c=reference_patch.c,
            C=reference_patch.C,
            u_nodes=reference_patch.u_nodes,
            t_nodes=reference_patch.t_nodes,
            points=np.repeat(
                reference_patch.points[:, :1, :], reference_patch.n_t, axis=1
            ),
            f_values=reference_patch.f_values,
            kappa_hat_values=reference_patch.kappa_hat_values,
        )
        du = flat.u_nodes[1] - flat.u_nodes[0]
        with pytest.raises(VerificationInputError):
            local_geometry(flat, 30, 30, h_fd=du)


class TestVerifyPatch:
    def test_reference_patch_passes(self, reference_report):
        assert reference_report.overall
        for entry in reference_report.entries:
            assert entry.passed, entry

    def test_report_has_fixed_entry_order(self, reference_report):
        names = [e.name for e in reference_report.entries]
        assert names[0] == "unit_sphere"
        assert names == sorted(names, key=names.index)  # stable, no dupes
        assert len(set(names)) == len(names)
        assert "codazzi_residual" in names and "ricci_residual" in names

    def test_fast_level_passes_and_skips_third_order(self, reference_patch):
        report = verify_patch(reference_patch, level="fast")
        assert report.overall
        names = [e.name for e in report.entries]
        assert "codazzi_residual" not in names

    def test_recovered_constants(self, reference_report):
        assert reference_report.entry("recovered_c").max <= 1e-3
        assert reference_report.entry("recovered_C").max <= 1e-3

    def test_f_measured_close(self, reference_report):
        assert reference_report.entry("f_rel").max <= 1e-3

    def test_shape_spectra(self, reference_report):
        assert reference_report.entry("shape_A3_spectrum").max <= 1e-3
        assert reference_report.entry("shape_A4_trace").max <= 1e-3

    def test_pnmc_and_biconservativity(self, reference_report):
        assert reference_report.entry("pnmc_residual").max <= 1e-3
        assert reference_report.entry("biconservativity").max <= 1e-3

    def test_gauss_curvature_checks(self, reference_report):
        assert reference_report.entry("gauss_K_intrinsic").max <= 5e-3
        assert reference_report.entry("gauss_K_extrinsic").max <= 5e-3
        assert reference_report.entry("gauss_K_below_one").max < 0.0

    def test_level_circles(self, reference_report):
        assert reference_report.entry("level_circle_constancy").max <= 1e-3
        assert reference_report.entry("level_circle_value").max <= 5e-3

    def test_witness_floor(self, reference_report):
        # min 4 c f^(7/2) is about sqrt(2) at the anchor, well above 0.5
        entry = reference_report.entry("nonbiharmonic_witness")
        assert entry.max < 0.0
        assert 0.5 - entry.max == pytest.approx(math.sqrt(2.0), rel=0.2)

    def test_halving_step_divides_residuals_by_about_four(
        self, reference_patch, reference_report
    ):
        coarse = verify_patch(reference_patch, level="full", stride=2)
        for name in CONVERGENT_ENTRIES:
            ratio = coarse.entry(name).max / reference_report.entry(name).max
            assert 3.0 <= ratio <= 5.0, (name, ratio)

    def test_perturbed_point_flags_unit_sphere(self, reference_patch):
        bad = perturbed_copy(reference_patch, 32, 32, delta=1e-2)
        report = verify_patch(bad, level="full")
        assert not report.overall
        assert not report.entry("unit_sphere").passed
        assert report.entry("unit_sphere").max > 1e-3

    def test_minimal_grid_produces_report(self, anchor_params):
        patch = sample_patch(anchor_params, ANCHOR_F0, u_span=0.05, n_u=8, n_t=8, t_span=0.05)
        report = verify_patch(patch, level="full")
        assert len(report.entries) >= 20
        assert report.overall

    def test_too_small_grid_rejected(self, anchor_params):
        patch = sample_patch(anchor_params, ANCHOR_F0, u_span=0.05, n_u=6, n_t=8, t_span=0.05)
        with pytest.raises(VerificationInputError):
            verify_patch(patch)

    def test_unknown_level_rejected(self, reference_patch):
        with pytest.raises(VerificationInputError):
            verify_patch(reference_patch, level="exhaustive")

    def test_nonuniform_grid_rejected(self, reference_patch):
        crooked = SurfacePatch(
            c=reference_patch.c,
            C=reference_patch.C,
            u_nodes=reference_patch.u_nodes**1.01,
            t_nodes=reference_patch.t_nodes,
            points=reference_patch.points,
            f_values=reference_patch.f_values,
            kappa_hat_values=reference_patch.kappa_hat_values,
        )
        with pytest.raises(VerificationInputError):
            verify_patch(crooked)


class TestIndependence:
    def test_verification_ignores_frames_and_fprime(self, reference_patch):
        # the verdict must be reproducible from the points plus (c, C, f)
        # metadata alone, the only construction data a CSV round trip keeps
        stripped = SurfacePatch(
            c=reference_patch.c,
            C=reference_patch.C,
            u_nodes=reference_patch.u_nodes,
            t_nodes=reference_patch.t_nodes,
            points=reference_patch.points,
            f_values=reference_patch.f_values,
            kappa_hat_values=reference_patch.kappa_hat_values,
        )
        report = verify_patch(stripped, level="full")
        assert report.overall

    def test_geometry_grid_nan_borders(self, reference_patch):
        geo = build_geometry(reference_patch, stride=1)
        assert np.all(np.isnan(geo.Xu[0]))
        assert np.all(np.isnan(geo.Xu[-1]))
        assert np.all(np.isfinite(geo.Xu[1:-1, 1:-1]))
