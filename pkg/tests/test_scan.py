import math

import pytest

from conftest import ANCHOR_C, ANCHOR_CC
from pnmcsurf.profile import ModelParams, positivity_window
from pnmcsurf.scan import RangeSpec, scan_triples, scan_windows


def single(v):
    return RangeSpec(v, v, 1)


class TestScanTriples:
    def test_admissible_line(self):
        rows = scan_triples(
            kappa0=single(1.0),
            dkappa0=single(0.0),
            ddkappa0=RangeSpec(-7.9, -5.5, 4),
            u_probe=0.25,
        )
        # ddkappa0 in {-7.9, -7.1, -6.3, -5.5}, all inside (-8, -16/3)
        assert len(rows) == 4
        assert all(r.admissible for r in rows)
        assert all(r.status == "ok" for r in rows)
        assert all(r.u_max == 0.25 for r in rows)
        assert all(r.c2 > 0 and r.C2 > 0 for r in rows)

    def test_inadmissible_cell(self):
        rows = scan_triples(single(1.0), single(0.0), single(-5.0), u_probe=0.1)
        assert len(rows) == 1
        assert not rows[0].admissible
        assert rows[0].status == "inadmissible"
        assert rows[0].u_max is None and rows[0].c2 is None

    def test_empty_grid(self):
        rows = scan_triples(RangeSpec(1.0, 2.0, 0), single(0.0), single(-6.0))
        assert rows == []

    def test_deterministic(self):
        spec = dict(
            kappa0=RangeSpec(0.8, 1.2, 2),
            dkappa0=single(0.0),
            ddkappa0=RangeSpec(-7.0, -6.0, 2),
            u_probe=0.1,
        )
        assert scan_triples(**spec) == scan_triples(**spec)

    def test_anchor_constants(self):
        rows = scan_triples(single(1.0), single(0.0), single(-6.0), u_probe=0.1)
        assert rows[0].c2 == pytest.approx(math.sqrt(2.0), rel=1e-12)
        assert rows[0].C2 == pytest.approx((28.0 / 9.0) * 2.0**1.75, rel=1e-12)


class TestScanWindows:
    def test_anchor_window(self):
        rows = scan_windows(single(ANCHOR_C), single(ANCHOR_CC))
        assert len(rows) == 1
        r = rows[0]
        assert r.has_window
        assert r.f_lo < 2.0**-0.5 < r.f_hi
        assert r.width == pytest.approx(r.f_hi - r.f_lo)

    def test_tiny_C_has_no_window(self):
        rows = scan_windows(single(1.0), single(1e-6))
        assert not rows[0].has_window
        assert rows[0].f_lo is None

    def test_width_monotone_in_C(self):
        rows = scan_windows(single(ANCHOR_C), RangeSpec(ANCHOR_CC, 3.0 * ANCHOR_CC, 5))
        widths = [r.width for r in rows]
        assert all(b >= a for a, b in zip(widths, widths[1:]))

    def test_grid_order_is_c_outer_C_inner(self):
        rows = scan_windows(RangeSpec(1.0, 2.0, 2), RangeSpec(3.0, 4.0, 2))
        combos = [(r.c, r.C) for r in rows]
        assert combos == [(1.0, 3.0), (1.0, 4.0), (2.0, 3.0), (2.0, 4.0)]


class TestCrossModule:
    def test_admissible_triples_land_in_nonempty_windows(self):
        rows = scan_triples(
            kappa0=RangeSpec(0.7, 1.3, 3),
            dkappa0=RangeSpec(-0.3, 0.3, 3),
            ddkappa0=RangeSpec(-9.0, -5.0, 5),
            u_probe=0.05,
        )
        admissible = [r for r in rows if r.admissible]
        assert admissible
        for r in admissible:
            window = positivity_window(
                ModelParams(c=math.sqrt(r.c2), C=math.sqrt(r.C2))
            )
            assert window is not None


class TestRangeSpec:
    def test_count_one_pins_lo(self):
        assert list(RangeSpec(2.0, 9.0, 1).values()) == [2.0]

    def test_invalid_multi_point_range(self):
        with pytest.raises(ValueError):
            RangeSpec(2.0, 1.0, 3)
