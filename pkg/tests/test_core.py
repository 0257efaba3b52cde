import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yinyang.cap import grim_reaper
from yinyang.core import (
    SampledCurve,
    compute_geometry,
    enclosed_area,
    intersection_area,
    is_simple,
    resample_by_arclength,
    rotate,
    segment_lengths,
    symmetric_difference_area,
    total_curvature,
)
from yinyang.errors import DegenerateSegment, OpenCurve, SelfIntersecting
from yinyang.flow import turning_angles


def polygon(n, r=1.0, phase=0.0):
    th = phase + np.arange(n) * (2 * np.pi / n)
    return r * np.column_stack([np.cos(th), np.sin(th)])


UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_rotate_basis_vectors():
    assert np.allclose(rotate([1.0, 0.0], np.pi / 2), [0.0, 1.0], atol=1e-15)
    assert np.allclose(rotate([0.0, 1.0], np.pi / 2), [-1.0, 0.0], atol=1e-15)
    v = np.array([0.3, -2.0])
    assert np.array_equal(rotate(v, 0.0), v)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_rotate_composes(a, b):
    v = np.array([1.3, -0.4])
    assert np.allclose(rotate(rotate(v, a), b), rotate(v, a + b), atol=1e-12)


def test_curvature_of_unit_circle():
    geo = compute_geometry(SampledCurve(polygon(1000)))
    assert np.max(np.abs(geo.curvature - 1.0)) < 1e-4


def test_curvature_of_straight_segment():
    x = np.arange(0.0, 5.01, 0.5)
    geo = compute_geometry(SampledCurve(np.column_stack([x, 2 * x]), closed=False))
    assert np.nanmax(np.abs(geo.curvature[1:-1])) < 1e-8


def test_curvature_of_grim_reaper():
    # closed form kappa = 1/cosh p, orientation chosen so the cap is convex
    p = np.linspace(-5, 5, 2001)
    G = grim_reaper(p)[0]
    geo = compute_geometry(SampledCurve(G, closed=False))
    err = np.abs(np.abs(geo.curvature[1:-1]) - 1 / np.cosh(p[1:-1]))
    assert err.max() < 1e-5


def test_resample_square_spacing():
    out = resample_by_arclength(SampledCurve(UNIT_SQUARE), 8)
    assert len(out) == 8
    assert np.allclose(segment_lengths(out.points, True), 0.5, atol=1e-12)


def test_resample_equispaced_is_idempotent():
    P = polygon(64)
    out = resample_by_arclength(SampledCurve(P), 64)
    assert np.max(np.abs(out.points - P)) < 1e-10


def test_resample_circle_refinement():
    out = resample_by_arclength(SampledCurve(polygon(100)), 400)
    assert np.max(np.abs(np.hypot(*out.points.T) - 1.0)) < 1e-3


def test_enclosed_area_orientation():
    assert enclosed_area(SampledCurve(UNIT_SQUARE)) == 1.0
    assert enclosed_area(SampledCurve(UNIT_SQUARE[::-1])) == -1.0
    assert abs(enclosed_area(SampledCurve(polygon(10000))) - np.pi) < 1e-6


def test_enclosed_area_needs_closed_curve():
    with pytest.raises(OpenCurve):
        enclosed_area(SampledCurve(UNIT_SQUARE, closed=False))


def test_symmetric_difference_examples():
    assert symmetric_difference_area(UNIT_SQUARE, UNIT_SQUARE) < 1e-12
    assert abs(symmetric_difference_area(UNIT_SQUARE, UNIT_SQUARE + [0.5, 0.0]) - 1.0) < 1e-10
    ann = symmetric_difference_area(polygon(10000), polygon(10000, 2.0))
    assert abs(ann - 3 * np.pi) < 1e-4


def test_symmetric_difference_rejects_crossing_boundary():
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert not is_simple(bowtie)
    with pytest.raises(SelfIntersecting):
        symmetric_difference_area(bowtie, UNIT_SQUARE)


def test_degenerate_samples_rejected():
    with pytest.raises(DegenerateSegment):
        SampledCurve(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 2.0), st.integers(0, 10_000))
def test_symmetric_difference_inclusion_exclusion(dx, dy, r, seed):
    rng = np.random.default_rng(seed)
    a = polygon(200) * (1 + 0.2 * rng.random())
    b = polygon(150, r) + [dx, dy]
    lhs = abs(enclosed_area(SampledCurve(a))) + abs(enclosed_area(SampledCurve(b))) - 2 * intersection_area(a, b)
    assert abs(lhs - symmetric_difference_area(a, b)) < 1e-9
    assert symmetric_difference_area(a, b) >= 0.0
    assert abs(symmetric_difference_area(a, b) - symmetric_difference_area(b, a)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_total_curvature_is_sum_of_turning_angles(seed):
    # a smooth star curve: total curvature 2 pi, and the trapezoid sum
    # agrees with the exterior-angle sum as the mesh is refined
    rng = np.random.default_rng(seed)
    n = 2000
    th = np.arange(n) * (2 * np.pi / n)
    a = rng.uniform(-0.1, 0.1, 3)
    r = 1 + a[0] * np.cos(2 * th) + a[1] * np.sin(3 * th) + a[2] * np.cos(5 * th)
    P = r[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    turn = turning_angles(P, True)[0]
    assert abs(turn.sum() - 2 * np.pi) < 1e-10
    assert abs(total_curvature(SampledCurve(P)) - 2 * np.pi) < 1e-3
