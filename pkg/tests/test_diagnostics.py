import math

import numpy as np
import pytest

from conftest import PARAMS, solved
from hypcaloron.diagnostics import (averaged_flux_identity, axis_window, far_field_decay, gradient_norm,
                                    near_axis_decay, observed_order)
from hypcaloron.errors import TruncationError, ValidationError
from hypcaloron.grid import ScalarField, StripGrid
from hypcaloron.sources import SourceData, VortexConfig

N0 = SourceData(VortexConfig((), 2.0))


def test_vacuum_passes_vacuously():
    g = StripGrid(256, 64, 14.0, 2.0)
    v = ScalarField(g, np.zeros(g.shape))
    near = near_axis_decay(v, (2 * g.hr, 0.5))
    assert near["passed"] and near["slope_v"] == math.inf
    far = far_field_decay(v, PARAMS, 4.0)
    assert far["passed"] and far["rate"] == math.inf and far["grad_outer_edge"] == 0.0
    flux = averaged_flux_identity(v, N0, PARAMS)
    assert flux["nonlinear_integral"] == 0.0 and flux["lap_integral"] == 0.0
    assert gradient_norm(v, 0.1) == 0.0


def test_axis_window():
    g = StripGrid(1024, 256, 14.0, 2.0)
    lo, hi = axis_window(g, 0.45)
    assert lo == pytest.approx(2 * g.hr) and hi == pytest.approx(0.225)
    # coarse: the window must widen to 5 nodes but may not pass r_lo
    g = StripGrid(256, 64, 14.0, 2.0)
    with pytest.raises(ValidationError):
        axis_window(g, 0.2)
    with pytest.raises(ValidationError):
        near_axis_decay(ScalarField(g, np.zeros(g.shape)), (2 * g.hr, 3 * g.hr))


def test_near_axis_slopes_stable_under_refinement():
    out = []
    for n in (512, 1024):
        b = solved("n1", n, n // 4)
        near = b.diagnostics["near_axis"]
        assert near["passed"]
        assert near["slope_v"] >= 1.8 and near["slope_vt"] >= 1.8
        assert near["vr_lower"] and near["vr_upper"]
        out.append(near["slope_v"])
    assert abs(out[0] - out[1]) <= 0.05


def test_far_field(n1_bundle):
    far = n1_bundle.diagnostics["far_field"]
    assert far["passed"]
    assert far["rate"] >= 0.8 * 4.0 / PARAMS.S
    assert far["grad_outer_edge"] < 1e-4
    assert far["plateau_variation"] < 1e-3


def test_decay_checks_monotone_in_refinement():
    # a pass on the coarser mesh persists on the finer one
    for name in ("n1", "n2"):
        a, b = solved(name, 512, 128), solved(name, 1024, 256)
        for key in ("near_axis", "far_field"):
            if a.diagnostics[key]["passed"]:
                assert b.diagnostics[key]["passed"]


def test_far_field_truncation():
    g = StripGrid(70, 16, 7.0, 2.0)
    with pytest.raises(TruncationError):
        far_field_decay(ScalarField(g, np.zeros(g.shape)), PARAMS, 4.0)
    g = StripGrid(140, 16, 14.0, 2.0)
    ramp = np.repeat(0.01 * g.r[:, None], g.Nt, axis=1)
    with pytest.raises(TruncationError):
        far_field_decay(ScalarField(g, ramp), PARAMS, 4.0)


@pytest.mark.parametrize("name,N", [("n1", 1), ("n2", 2), ("double", 2)])
def test_flux_identity(name, N):
    b = solved(name)
    fi = b.diagnostics["flux_identity"]
    assert fi["target"] == pytest.approx(4 * math.pi * N)
    assert abs(fi["nonlinear_rel_error"]) <= 0.01
    assert abs(fi["source_integral"] / fi["target"] - 1) <= 1e-3
    assert abs(fi["lap_integral_closed"]) <= 1e-8 * fi["target"]
    assert fi["lap_integral"] == pytest.approx(fi["axis_term_prediction"], rel=1e-10, abs=1e-12)


def test_gradient_norm(n1_bundle):
    b = n1_bundle
    val = b.diagnostics["grad_norm_outside_rlo"]
    assert math.isfinite(val) and val > 0
    assert gradient_norm(b.v, 0.0) >= val
    assert gradient_norm(b.v, b.grid.r_max + 1) == 0.0


def test_diagnostics_do_not_modify_v(n1_bundle):
    b = n1_bundle
    before = b.v.values.copy()
    near_axis_decay(b.v, axis_window(b.grid, b.sources.cutoff.r_lo))
    far_field_decay(b.v, PARAMS, b.sources.cutoff.r_hi)
    averaged_flux_identity(b.v, b.sources, PARAMS)
    gradient_norm(b.v, 0.1)
    assert np.array_equal(before, b.v.values)


def test_observed_order():
    assert observed_order([4.0, 1.0, 0.25]) == pytest.approx([2.0, 2.0])
