from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from yinyang.acceptance import remainder_slopes
from yinyang.deficit import fit_power_law
from yinyang.errors import OutOfRange
from yinyang.soliton import (
    asymptotic_u,
    default_table,
    eval_R_expansion,
    expansion_coefficients,
    hunsmo_residual,
    integrate_u,
    tau_quantities,
)


@pytest.fixture(scope="module")
def table():
    return default_table()


def test_u_stays_in_open_quarter_turn(table):
    th = np.linspace(table.theta_min + 1e-6, 2000.0, 20001)
    u = table.u(th)
    assert np.all(u > 0) and np.all(u < np.pi / 2)


def test_theta_u_tends_to_half(table):
    # u = theta - R^2/2 and R^2 = 2 theta - 1/theta + O(theta^-2) give theta u -> 1/2
    assert abs(200.0 * table.u(200.0) - 0.5) < 1e-3


def test_leading_asymptotics(table):
    th = 1e3
    assert abs(table.R(th) / np.sqrt(2 * th) - 1) < 1e-4
    assert abs(table.Rprime(th) * np.sqrt(2 * th) - 1) < 1e-3
    assert abs(table.R(th) * table.Rprime(th) - 1) < 1e-3


def test_first_integral_at_random_angles(table):
    th = np.random.default_rng(7).uniform(8, 2000, 100)
    assert np.max(np.abs(hunsmo_residual(th, table.R(th), table.Rprime(th)))) < 1e-6


def test_matches_independent_integration(table):
    # u' = 1 - 2 (theta - u) tan u, integrated from the tabulated value at 8
    sol = solve_ivp(lambda th, u: 1 - 2 * (th - u) * np.tan(u), (8.0, 300.0), [float(table.u(8.0))],
                    method="Radau", rtol=1e-12, atol=1e-14, dense_output=True)
    th = np.linspace(8.0, 300.0, 50)
    assert np.max(np.abs(sol.sol(th)[0] - table.u(th))) < 1e-9


def test_theta_of_R_inverts(table):
    th = np.linspace(2.0, 1500.0, 200)
    assert np.max(np.abs(table.theta_of_R(table.R(th)) - th)) < 1e-9


def test_out_of_range(table):
    with pytest.raises(OutOfRange):
        table.R(5000.0)


def test_seeded_table_agrees(table):
    seeded = integrate_u(400.0, theta_seed=30.0)
    th = np.linspace(30.0, 400.0, 30)
    assert np.max(np.abs(seeded.R(th) - table.R(th))) < 1e-9


def test_expansion_coefficients_exact():
    co = expansion_coefficients(6)
    assert co.c[0] == 1 and co.c[1] == 0 and co.c[2] == -1
    # the recursion gives a vanishing third coefficient; the first nonzero
    # one after c2 is c4
    assert co.c[3] == 0
    assert co.c[4] == Fraction(-25, 6)
    assert co.u[1] == Fraction(1, 2)
    # 2 theta = R^2 + 2 R^-2 + O(R^-4)
    assert co.ctilde[1] == 0 and co.ctilde[2] == 2


def test_u1_matches_table_fit(table):
    th = np.geomspace(200.0, 2000.0, 10)
    fit = np.polyfit(1 / th, table.u(th), 2)
    assert abs(fit[1] - 0.5) < 1e-3


def test_asymptotic_u_close_to_table(table):
    th = np.array([100.0, 400.0])
    assert np.max(np.abs(asymptotic_u(th, 6) - table.u(th))) < 1e-12


def test_order_zero_expansion():
    R, _ = eval_R_expansion(expansion_coefficients(3), 50.0, 0)
    assert R == pytest.approx(10.0, abs=1e-14)


def test_third_order_remainder_slopes(table):
    th = np.geomspace(30, 300, 25)
    co = expansion_coefficients(4)
    R, Rp = eval_R_expansion(co, th, 3)
    s_R = fit_power_law(th, np.abs(R - table.R(th)))[0]
    s_Rp = fit_power_law(th, np.abs(Rp - table.Rprime(th)))[0]
    assert abs(s_R + 3.5) <= 0.15
    assert abs(s_Rp + 4.5) <= 0.2


def test_remainder_slope_per_order():
    # with c3 = 0 the remainders after one, two and three corrections decay
    # like theta^(-3/2), theta^(-7/2), theta^(-7/2)
    s = remainder_slopes()
    assert s[1] == pytest.approx(-1.5, abs=0.05)
    assert s[2] == pytest.approx(-3.5, abs=0.05)
    assert s[3] == pytest.approx(-3.5, abs=0.05)


def test_tau_quantities(table):
    tq = tau_quantities(-100.0, table)
    assert tq.tau == 400.0
    assert tq.eps * tq.R == pytest.approx(1.0, abs=1e-15)
    assert tq.tau * (1 - tq.R ** 2 / tq.tau) * tq.tau == pytest.approx(2.0, rel=0.05)
    assert tq.R_theta * np.sqrt(tq.tau) == pytest.approx(1.0, abs=1e-2)
    with pytest.raises(OutOfRange):
        tau_quantities(-0.1, table)
