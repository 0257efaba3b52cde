import numpy as np
import pytest

from yinyang.assembly import band_limits, interpolant_k, leaf_as_uv_graph
from yinyang.cap import build_cap
from yinyang.core import SampledCurve
from yinyang.deficit import (
    cap_deficit_W,
    deficit_report,
    fit_power_law,
    geometric_time_grid,
    graph_deficit_Wv,
    parametric_deficit,
    total_error,
    transition_deficit,
)
from yinyang.errors import MismatchedGrids, OutOfRange
from yinyang.soliton import default_table, tau_quantities

TAUS = np.geomspace(100.0, 4000.0, 12)


def circle(r, n=1000):
    th = np.arange(n) * (2 * np.pi / n)
    return SampledCurve(r * np.column_stack([np.cos(th), np.sin(th)]), params=th, period=2 * np.pi)


def test_static_circle_deficit_is_its_length():
    c = circle(1.0)
    _, l1 = parametric_deficit(c, c, 1e-3)
    assert l1 == pytest.approx(2 * np.pi, abs=1e-3)


def test_shrinking_circle_has_small_deficit():
    r0, t, dt = 2.0, 0.3, 1e-4
    a = circle(np.sqrt(r0 ** 2 - 2 * t))
    b = circle(np.sqrt(r0 ** 2 - 2 * (t + dt)))
    assert parametric_deficit(a, b, dt)[1] < 1e-3


def test_rotating_soliton_has_small_deficit():
    table = default_table()
    th = np.linspace(10.0, 30.0, 4001)
    dt = 1e-5

    def arm(t):
        return SampledCurve(table.R(th - t)[:, None] * np.column_stack([np.cos(th), np.sin(th)]),
                            closed=False, params=th)

    assert parametric_deficit(arm(0.0), arm(dt), dt)[1] < 1e-3


def test_mismatched_curves_rejected():
    with pytest.raises(MismatchedGrids):
        parametric_deficit(circle(1.0, 100), circle(1.0, 120), 1e-3)


def test_cap_deficit_scaling():
    sup = [np.abs(cap_deficit_W(build_cap(-x / 4))).max() for x in TAUS]
    assert fit_power_law(TAUS, np.array(sup))[0] <= -1.9


def test_uncorrected_cap():
    # the driving term vanishes at the tip, so W(0) = O(1/tau^2) while the
    # sup decays only like 1/tau
    sup, tip = [], []
    for tau in TAUS:
        cap = build_cap(-tau / 4, n_nodes=4001, corrected=False)
        W = cap_deficit_W(cap)
        sup.append(np.abs(W).max())
        tip.append(abs(W[cap.p.size // 2]))
    s = fit_power_law(TAUS, np.array(sup))[0]
    assert -1.5 < s <= -0.8
    assert np.max(np.array(tip) * TAUS ** 2) < 10.0


def test_cap_deficit_cross_validation():
    # term-by-term formula against differences of the ambient cap images;
    # the gap is the second-order spatial difference error
    t, dt = -100.0, 1e-6
    gaps = []
    for n in (2001, 4001):
        a = build_cap(t, n_nodes=n, p_max=20.0)
        b = build_cap(t + dt, n_nodes=n, p_max=20.0)
        W, _ = parametric_deficit(SampledCurve(a.ambient(), False, params=a.p),
                                  SampledCurve(b.ambient(), False, params=a.p), dt)
        gaps.append(np.max(np.abs(W - cap_deficit_W(a))[5:-5]))
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.1)
    # discretization error estimate from the two resolutions
    assert gaps[1] < 10 * (gaps[0] - gaps[1]) / 3


def test_transition_deficit_scaling():
    for sign in (1, -1):
        sup = [np.abs(transition_deficit(sign, -tau / 4)[1]).max() for tau in TAUS]
        assert fit_power_law(TAUS, np.array(sup))[0] <= -1.9


def test_leaves_are_exact_solutions():
    t = -100.0
    tq = tau_quantities(t)
    lo, hi = band_limits(tq.tau, 10.0)
    v = -np.linspace(lo, hi, 101)
    for y in (np.pi / 2, -np.pi / 2, 0.4):
        L = leaf_as_uv_graph(y, t, v)
        assert np.abs(graph_deficit_Wv(L.U, L.U_v, L.U_vv, L.U_t, v, tq)).max() < 1e-6


def test_interpolant_derivative_bound():
    # (|k_vv| + |k_v| + |k_t|) tau / ln tau stays bounded over the sweep
    for sign in (1, -1):
        scaled = []
        for tau in TAUS:
            lo, hi = band_limits(tau, 10.0)
            v = -np.linspace(lo, hi, 2001)
            g = interpolant_k(sign, -tau / 4, v)
            scaled.append(np.max(np.abs(g.k_vv) + np.abs(g.k_v) + np.abs(g.k_t)) * tau / np.log(tau))
        assert fit_power_law(TAUS, np.array(scaled))[0] <= 0.0


def test_per_time_deficit_slope():
    ts = geometric_time_grid(-1000.0, -25.0, 1.5)
    vals = [deficit_report(t).total_l1 for t in ts]
    assert fit_power_law(-ts, np.array(vals))[0] <= -1.8


def test_total_error_finite_and_decaying():
    te = total_error(-1000.0, -25.0, ratio=1.3)
    assert np.isfinite(te.total) and te.tail > 0
    assert te.E(800.0) < 0.2 * te.E(100.0)


def test_report_row_columns():
    row = deficit_report(-100.0).row()
    assert list(row) == ["t", "tau", "cap_sup", "cap_l1", "trans_l1", "total_l1"]
    assert row["total_l1"] >= row["cap_l1"]


def test_time_grid():
    g = geometric_time_grid(-1000.0, -25.0, 1.1)
    assert g[0] == -1000.0 and g[-1] == pytest.approx(-25.0)
    assert np.all(np.diff(g) > 0)
    with pytest.raises(OutOfRange):
        geometric_time_grid(-10.0, -20.0)


def test_power_law_fit_recovers_exponent():
    x = np.geomspace(1, 100, 9)
    s, a, se = fit_power_law(x, 3.0 * x ** -1.7)
    assert s == pytest.approx(-1.7, abs=1e-12)
    assert a == pytest.approx(np.log(3.0), abs=1e-12)
    assert se < 1e-10
