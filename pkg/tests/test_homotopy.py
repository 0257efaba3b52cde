import json
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yinyang.acceptance import CONTRACTION_TOL, nested_circle_contraction, star_contraction
from yinyang.core import rotate
from yinyang.errors import BoundViolation, MismatchedGrids, OutOfRange
from yinyang.homotopy import (
    HomotopySheet,
    area_comparison,
    duhamel_deviation,
    homotopy_length,
    normalize_homotopy,
    radial_sheet,
    random_star_sheet,
    swept_bound,
    triangle_defect,
    windowed_approximate_solution,
)


def unit_circle(n=400, phase=0.0):
    th = np.arange(n) * (2 * np.pi / n) + phase
    return np.column_stack([np.cos(th), np.sin(th)])


def test_annulus_length():
    E = unit_circle()
    assert homotopy_length(radial_sheet(E, 2 * E)) == pytest.approx(3 * np.pi, rel=1e-3)


def test_constant_sheet_has_zero_length():
    E = unit_circle(100)
    assert homotopy_length(HomotopySheet([0.0, 0.5, 1.0], np.stack([E, E, E]))) == 0.0


def test_folded_sheet_exceeds_swept_area():
    # out to radius 2 and back to 1.5 sweeps part of the annulus twice
    E = unit_circle()
    r = np.concatenate([np.linspace(1, 2, 17), np.linspace(2, 1.5, 9)[1:]])
    sheet = HomotopySheet(np.linspace(0, 1, r.size), r[:, None, None] * E[None])
    assert homotopy_length(sheet) > swept_bound(sheet) + 1.0


def test_radial_sheet_is_a_normalization_fixpoint():
    E = unit_circle()
    sheet = radial_sheet(E, 2 * E)
    assert np.max(np.abs(normalize_homotopy(sheet).curves - sheet.curves)) < 1e-10


def test_normalization_undoes_a_rotated_parametrization():
    # the outer circle is parametrized with a twist, so X_eps has a
    # tangential part that inflates the length until normalized
    E = unit_circle()
    twisted = 2 * unit_circle(400, phase=0.3)
    sheet = radial_sheet(E, twisted)
    assert homotopy_length(sheet) > 3 * np.pi * 1.01
    norm = normalize_homotopy(sheet)
    assert homotopy_length(norm) == pytest.approx(3 * np.pi, rel=1e-3)
    assert norm.normality_residual < 1e-3


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_normalized_random_star_sheets(seed):
    sheet = normalize_homotopy(random_star_sheet(np.random.default_rng(seed), n_nodes=300, n_slices=17))
    assert sheet.normality_residual < 1e-3
    assert homotopy_length(sheet) >= swept_bound(sheet) * (1 - 1e-3)


def test_reversal_and_rigid_motion_invariance():
    sheet = normalize_homotopy(random_star_sheet(np.random.default_rng(8), n_nodes=300, n_slices=17))
    L = homotopy_length(sheet)
    rev = HomotopySheet(1.0 - sheet.eps_grid[::-1], sheet.curves[::-1])
    assert homotopy_length(rev) == pytest.approx(L, rel=1e-12)
    moved = HomotopySheet(sheet.eps_grid, rotate(sheet.curves.reshape(-1, 2), 0.7).reshape(sheet.curves.shape)
                          + np.array([3.0, -1.0]))
    assert homotopy_length(moved) == pytest.approx(L, rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.1, 2.0))
def test_length_bounds_swept_area(r0, dr):
    E = unit_circle(200)
    sheet = radial_sheet(r0 * E, (r0 + dr) * E, 9)
    assert homotopy_length(sheet) >= swept_bound(sheet) * (1 - 1e-3)


def test_triangle_defect_vanishes_after_normalization():
    # X_eps = phi N gives |X_eps|_s = |phi_s| and |X_eps_s|^2 = phi_s^2 + kappa^2 phi^2
    raw = random_star_sheet(np.random.default_rng(11), n_nodes=300, n_slices=9)
    before = np.max(np.abs(triangle_defect(raw)))
    after = np.max(np.abs(triangle_defect(normalize_homotopy(raw))))
    assert before > 0.1
    assert after < 1e-5 * max(before, 1.0)


def test_nested_circles_keep_their_length():
    nc = nested_circle_contraction()
    assert nc["violations"] == []
    assert nc["drift"] < 1e-2


def test_star_sheet_contracts():
    r = star_contraction(0)
    assert r["violations"] == []
    assert r["ratio"] <= 1.0 + CONTRACTION_TOL


def test_duhamel_single_curve():
    E = unit_circle(50)
    r = duhamel_deviation([SimpleNamespace(t=0.0, points=E, closed=True)])
    assert (r.length, r.delta) == (0.0, 0.0)
    assert r.ratio == 0.0


def test_duhamel_exact_shrinking_circle():
    E = unit_circle(200)
    series = [SimpleNamespace(t=t, points=np.sqrt(4 - 2 * t) * E, closed=True) for t in np.linspace(0, 0.1, 5)]
    r = duhamel_deviation(series)
    assert r.length < 1e-3
    assert r.delta < 1e-2


def test_duhamel_window_ratio():
    series = [windowed_approximate_solution(t, 2.0) for t in (-200.0, -199.5, -199.0)]
    r = duhamel_deviation(series)
    assert r.delta > 0
    assert r.ratio <= 1.1


def test_area_comparison():
    ts = np.array([0.0, 1.0, 2.0])
    vals = np.array([1.0, 1.0, 1.0])
    checks = area_comparison([(0.0, 0.1), (2.0, 2.0)], 0.1, ts, vals)
    assert checks[1].delta == pytest.approx(2.0)
    assert all(c.ok for c in checks)
    with pytest.raises(BoundViolation):
        area_comparison([(2.0, 3.0)], 0.1, ts, vals)
    assert not area_comparison([(2.0, 3.0)], 0.1, ts, vals, strict=False)[0].ok


def test_sheet_validation_and_json_round_trip():
    E = unit_circle(20)
    with pytest.raises(MismatchedGrids):
        HomotopySheet([0.0, 1.0], [E, unit_circle(21)])
    with pytest.raises(OutOfRange):
        HomotopySheet([1.0, 0.0], np.stack([E, E]))
    sheet = radial_sheet(E, 2 * E, 3)
    back = HomotopySheet.from_json(json.loads(json.dumps(sheet.to_json())))
    assert np.array_equal(back.curves, sheet.curves) and back.closed
