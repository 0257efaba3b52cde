import numpy as np
import pytest
from scipy.integrate import quad
from shapely.geometry import LineString, Point

from yinyang.assembly import (
    HALF_PI,
    ZFrame,
    build_approximate_solution,
    eta,
    h_pm,
    interpolant_k,
    leaf_as_uv_graph,
    leaf_point,
    omega_boundary,
)
from yinyang.core import enclosed_area, is_simple, rotate
from yinyang.deficit import fit_power_law
from yinyang.homotopy import (
    conforming_symmetric_difference,
    window_geometry,
    windowed_approximate_solution,
    windowed_omega,
)
from yinyang.soliton import default_table

TAUS = np.geomspace(100.0, 4000.0, 12)


@pytest.fixture(scope="module")
def table():
    return default_table()


@pytest.fixture(scope="module")
def curve100():
    return build_approximate_solution(-100.0)


def omega_area(t, table):
    # polar quadrature of the region between the inner and outer branches
    def integrand(th):
        r_out2 = 2 * (th - t + HALF_PI - table.u(th - t + HALF_PI))
        a_in = th - t - HALF_PI
        r_in2 = 2 * (a_in - table.u(a_in)) if a_in >= HALF_PI else 0.0
        return 0.5 * (r_out2 - r_in2)

    lo = t
    brk = [t + np.pi]
    val = 0.0
    for a, b in zip([lo] + brk, brk + [-t]):
        val += quad(integrand, a, b, limit=400, epsabs=1e-10, epsrel=1e-12)[0]
    return val


def test_zframe_tip_and_scaling(table):
    fr = ZFrame(-100.0, table)
    tip = rotate(np.array([fr.R, 0.0]), 100.0)
    assert np.allclose(fr.to_Z(tip), 0.0, atol=1e-9)
    assert np.linalg.norm(fr.from_Z(np.array([0.0, 1.0])) - tip) == pytest.approx(1 / fr.R, rel=1e-12)


def test_zframe_round_trip(table):
    fr = ZFrame(-250.0, table)
    X = np.random.default_rng(1).normal(scale=30.0, size=(100, 2))
    assert np.max(np.abs(fr.from_Z(fr.to_Z(X)) - X)) < 1e-10


def test_outer_leaves_are_soliton_branches(table):
    th = np.linspace(5, 30, 11)
    for y in (HALF_PI, -HALF_PI):
        r = np.hypot(*leaf_point(th, 0.0, y, table).T)
        assert np.allclose(r, table.R(th + y), rtol=1e-14)
    r1 = np.hypot(*leaf_point(20.0, 0.0, 0.3, table))
    r2 = np.hypot(*leaf_point(20.0, 0.0, -0.3, table))
    assert r1 != r2


def test_leaf_time_shift_equivariance(table):
    rng = np.random.default_rng(2)
    for th, t, s in rng.uniform([5, -20, -3], [40, -2, 3], (20, 3)):
        y = rng.uniform(-HALF_PI, HALF_PI)
        a = leaf_point(th + s, t + s, y, table)
        b = rotate(leaf_point(th, t, y, table), s)
        assert np.allclose(a, b, atol=1e-10)


def test_leaf_graph_expansion_slope(table):
    y, v = np.pi / 4, 1.0
    err = [abs(leaf_as_uv_graph(y, -tau / 4, np.array([v]), table).U[0] - (y - (y * y + v * v - 2 * v) / (2 * tau)))
           for tau in TAUS]
    assert fit_power_law(TAUS, np.array(err))[0] <= -1.9


def test_leaf_graph_limits(table):
    v = np.array([0.0])
    t = -500.0
    assert abs(leaf_as_uv_graph(0.0, t, v, table).U[0]) < 1e-5
    for y in (HALF_PI, -HALF_PI):
        U = leaf_as_uv_graph(y, t, v, table).U[0]
        assert abs(U - y) < 1e-3
        assert abs(U - h_pm(int(np.sign(y)), t, v)[0][0]) < 1e-5


def test_eta_values():
    assert eta(0.5) == 0.0 and eta(2.0) == 1.0
    assert eta(0.0) == 0.0 and eta(3.0) == 1.0
    x = np.linspace(-1, 4, 1000)
    assert np.all(np.diff(eta(x)) >= 0)


def test_eta_derivatives():
    x = np.linspace(0.6, 1.9, 2001)
    e, d1, d2 = eta(x, derivatives=True)
    assert np.max(np.abs(np.gradient(e, x) - d1)[2:-2]) < 1e-4
    assert np.max(np.abs(np.gradient(d1, x) - d2)[2:-2]) < 1e-3


def test_interpolant_saturates(table):
    t, tau = -100.0, 400.0
    v = -np.array([2.5, 0.25]) * np.log(tau)
    for sign in (1, -1):
        g = interpolant_k(sign, t, v, K=1.0, soliton=table)
        U = leaf_as_uv_graph(sign * HALF_PI, t, v, table).U
        h = h_pm(sign, t, v)[0]
        assert g.k[0] == U[0]
        assert g.k[1] == h[1]


def test_interpolant_gap_decays(table):
    gap = []
    for tau in TAUS:
        v = -np.linspace(5 * np.log(tau), 20 * np.log(tau), 401)
        gap.append(np.max(np.abs(leaf_as_uv_graph(HALF_PI, -tau / 4, v, table).U - h_pm(1, -tau / 4, v)[0])))
    assert fit_power_law(TAUS, np.array(gap))[0] <= -1.9


def test_assembled_curve_closed_and_simple(curve100):
    assert curve100.closed
    assert is_simple(curve100.points)
    assert [s.tag for s in curve100.segments] == ["arm+", "transition+", "cap", "transition-", "arm-"]


def test_cap_close_to_omega_boundary(curve100, table):
    seg = curve100.segment("cap")
    cap = curve100.points[seg.start:seg.stop]
    boundary = LineString(omega_boundary(-100.0).points)
    R = ZFrame(-100.0, table).R
    assert max(boundary.distance(Point(*x)) for x in cap) < 5 / R


def test_assembled_area_matches_omega(curve100, table):
    ref = omega_area(-100.0, table)
    assert abs(enclosed_area(curve100.curve()) - ref) / ref < 1e-2


def test_omega_boundary_geometry(table):
    t = -200.0
    om = omega_boundary(t)
    area = enclosed_area(om)
    assert area == pytest.approx(omega_area(t, table), rel=1e-4)
    assert area / (2 * np.pi * abs(t)) == pytest.approx(1.0, abs=0.05)
    d = np.array([np.cos(-t), np.sin(-t)])
    # the corners are resolved down to the refined spacing there
    line = LineString(np.vstack([om.points, om.points[:1]]))
    for sign in (1, -1):
        end = table.R(-2 * t + sign * HALF_PI) * d
        assert line.distance(Point(*end)) < 5e-3


def test_approximate_solution_approaches_omega(table):
    ts = np.array([-100.0, -200.0, -400.0, -800.0])
    area = []
    for t in ts:
        geom = window_geometry(t, 2.0)
        C = windowed_approximate_solution(t, 2.0, soliton=table)
        area.append(conforming_symmetric_difference(C.points, windowed_omega(t, 2.0, soliton=table), geom, table))
    assert fit_power_law(-ts, np.array(area))[0] <= -0.9
