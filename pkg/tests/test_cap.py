import numpy as np
import pytest

from yinyang.assembly import h_pm
from yinyang.cap import (
    F_asymptotic,
    build_cap,
    correction_derivatives,
    correction_F,
    driving_potential,
    grim_reaper,
)
from yinyang.core import rotate
from yinyang.deficit import fit_power_law
from yinyang.errors import OutOfRange

TAUS = np.geomspace(100.0, 4000.0, 12)


def test_grim_reaper_at_origin():
    G, Gp, k = grim_reaper(np.array([0.0]))
    assert np.array_equal(G[0], [0.0, 0.0])
    assert np.allclose(Gp[0], [-1.0, 0.0])
    assert k[0] == 1.0


def test_grim_reaper_asymptotes():
    G = grim_reaper(np.array([-40.0, 40.0]))[0]
    assert abs(G[0, 0] - np.pi / 2) < 1e-15
    assert abs(G[1, 0] + np.pi / 2) < 1e-15
    x = grim_reaper(np.linspace(0, 20, 200))[0][:, 0]
    assert np.all(np.diff(x) < 0)


def test_grim_reaper_curvature_value():
    k = grim_reaper(np.array([5.0]))[2][0]
    assert k == pytest.approx(2 * np.exp(-5) / (1 + np.exp(-10)), rel=1e-14)
    assert k == pytest.approx(0.013476, abs=1e-6)


def test_grim_reaper_is_unit_speed_with_stated_curvature():
    p = np.linspace(-6, 6, 6001)
    G, Gp, k = grim_reaper(p)
    assert np.allclose(np.linalg.norm(Gp, axis=1), 1.0, atol=1e-14)
    Gpp = np.gradient(Gp, p, axis=0)
    JGp = np.column_stack([-Gp[:, 1], Gp[:, 0]])
    assert np.max(np.abs(Gpp - k[:, None] * JGp)[5:-5]) < 1e-5


def test_correction_at_origin():
    F0 = correction_F(np.array([0.0]))[0]
    assert abs(F0) < 1e-15
    h = 1e-5
    Fp = (correction_F(np.array([h])) - correction_F(np.array([-h])))[0] / (2 * h)
    assert Fp == pytest.approx(-1.0, abs=1e-8)
    assert driving_potential(np.array([0.0]))[0] == 0.0


def test_correction_is_odd():
    p = np.linspace(0.1, 25, 50)
    assert np.allclose(correction_F(p), -correction_F(-p), atol=1e-12)


def test_correction_asymptotics():
    p = np.array([15.0, -15.0])
    assert np.max(np.abs(correction_F(p) - F_asymptotic(p))) < 1e-3


def test_derivative_identities_match_differences():
    p = np.linspace(-10, 10, 4001)
    F = correction_F(p)
    Fp, Fpp = correction_derivatives(p, F)
    assert np.max(np.abs(np.gradient(F, p) - Fp)[2:-2]) < 1e-5
    assert np.max(np.abs(np.gradient(Fp, p) - Fpp)[2:-2]) < 1e-5


def test_cap_tip_position():
    cap = build_cap(-100.0, n_nodes=401)
    mid = cap.p.size // 2
    assert np.allclose(cap.Z[mid], 0.0, atol=1e-12)
    X = cap.ambient()[mid]
    assert np.allclose(X, rotate(np.array([cap.tq.R, 0.0]), 100.0), atol=1e-12)


def test_cap_vertical_component():
    cap = build_cap(-100.0, p_max=15.0, n_nodes=3)
    v = cap.Z[:, 1]
    assert np.max(np.abs(v + np.log(np.cosh(cap.p)))) < 1e-3


def test_correction_size_decays():
    # |p| reaches 2 K ln tau, where F ~ (ln cosh p)^2 / 2, so the sup carries
    # a (ln tau)^2 factor on top of the 1/tau decay
    sup = []
    for tau in TAUS:
        c = build_cap(-tau / 4)
        sup.append(np.max(np.abs(c.f) + np.abs(c.f_p) + np.abs(c.f_pp) + tau * np.abs(c.f_t)))
    sup = np.array(sup)
    assert fit_power_law(TAUS, sup / np.log(TAUS) ** 2)[0] <= -0.9
    assert fit_power_law(TAUS, sup)[0] < -0.6


def test_cap_end_values_match_h():
    tau, t = 400.0, -100.0
    assert h_pm(1, t, np.array([0.0]))[0][0] == pytest.approx(np.pi / 2 - np.pi ** 2 / 8 / tau)
    assert h_pm(-1, t, np.array([0.0]))[0][0] == pytest.approx(-np.pi / 2 - np.pi ** 2 / 8 / tau)
    assert h_pm(1, -1e8, np.array([0.0]))[0][0] == pytest.approx(np.pi / 2, abs=1e-8)


def test_traced_cap_matches_h():
    tau, t = 400.0, -100.0
    cap = build_cap(t, n_nodes=20001)
    v = -10.0 * np.log(tau)
    right = cap.p > 0
    left = cap.p < 0
    u_right = np.interp(v, cap.Z[right, 1][::-1], cap.Z[right, 0][::-1])
    u_left = np.interp(v, cap.Z[left, 1], cap.Z[left, 0])
    assert abs(u_right - h_pm(-1, t, np.array([v]))[0][0]) < 10 / tau ** 2
    assert abs(u_left - h_pm(1, t, np.array([v]))[0][0]) < 10 / tau ** 2


def test_build_cap_domain():
    with pytest.raises(OutOfRange):
        build_cap(-10.0)
