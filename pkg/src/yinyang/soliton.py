"""Profile of the rotating spiral soliton.

The profile r = R(theta) of a curve that rotates rigidly with unit angular
speed under curve shortening solves

    R(theta)**2 / 2 - theta + arctan(R'(theta) / R(theta)) = 0.

With ``u = theta - R**2 / 2`` this becomes ``u' = 1 - 2 (theta - u) tan u``
with ``0 < u < pi/2``.  The curve leaves the origin at ``theta = pi/2`` and
``u -> 0`` as ``theta -> infinity``.

The table is built from the origin outward.  Near the origin the
equation is regular when written for theta as a function of R,

    d theta / dR = tan(R**2 / 2 - (theta - pi/2)) / R,
    theta = pi/2 + R**2 / 6 + R**6 / 567 + O(R**10),

and beyond R = 1.5 the u-equation is integrated forward, where it is
strongly contracting (and stiff).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import OutOfRange, SingularityReached, ToleranceFailure
from .series import Series, arctan_taylor

HALF_PI = 0.5 * np.pi

# switch from the theta(R) form to the u(theta) form at this radius
_R_SWITCH = 1.5
_R_START = 1e-3


@dataclass(frozen=True)
class SolitonTable:
    """Sampled soliton profile with Hermite interpolation of ``u``.

    Attributes
    ----------
    theta_grid, u_values, uprime_values : ndarray
        Nodes and nodal values of ``u`` and ``u'``.
    R_values, Rprime_values : ndarray
        ``R`` and ``R'`` at the nodes.
    theta_max : float
        Right end of the table.
    theta_seed : float or None
        Left end when the table was started from the asymptotic series
        instead of the origin.
    """

    theta_grid: np.ndarray
    u_values: np.ndarray
    uprime_values: np.ndarray
    R_values: np.ndarray
    Rprime_values: np.ndarray
    theta_max: float
    theta_seed: Optional[float] = None
    _spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spline = CubicHermiteSpline(self.theta_grid, self.u_values, self.uprime_values)
        object.__setattr__(self, "_spline", spline)

    @property
    def theta_min(self) -> float:
        return HALF_PI if self.theta_seed is None else float(self.theta_grid[0])

    def _check(self, theta: np.ndarray) -> None:
        if theta.size and (np.nanmin(theta) < self.theta_min - 1e-12 or np.nanmax(theta) > self.theta_max + 1e-9):
            raise OutOfRange(
                f"theta outside [{self.theta_min:.6g}, {self.theta_max:.6g}]"
            )

    def u(self, theta) -> np.ndarray:
        """``u(theta) = theta - R(theta)**2 / 2``."""
        th = np.asarray(theta, dtype=float)
        self._check(th)
        out = np.asarray(self._spline(np.maximum(th, self.theta_grid[0])))
        low = th < self.theta_grid[0]
        if np.any(low):
            # within 2e-7 of the origin: u = pi/2 - 2 (theta - pi/2) to O(R^6)
            out = np.where(low, HALF_PI - 2.0 * (th - HALF_PI), out)
        return out

    def uprime(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        self._check(th)
        out = np.asarray(self._spline(np.maximum(th, self.theta_grid[0]), 1))
        return np.where(th < self.theta_grid[0], -2.0, out)

    def R(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        low = th < self.theta_grid[0]
        r2 = 2.0 * (th - self.u(th))
        r = np.sqrt(np.maximum(r2, 0.0))
        if np.any(low):
            r = np.where(low, np.sqrt(np.maximum(6.0 * (th - HALF_PI), 0.0)), r)
        return r

    def Rprime(self, theta) -> np.ndarray:
        """``R' = (1 - u') / R``; infinite at the origin."""
        th = np.asarray(theta, dtype=float)
        r = self.R(th)
        with np.errstate(divide="ignore"):
            return (1.0 - self.uprime(th)) / r

    def theta_of_R(self, radius) -> np.ndarray:
        """Invert ``R(theta)``; accepts radii down to 0."""
        r = np.asarray(radius, dtype=float)
        if r.size and np.nanmin(r) < 0:
            raise OutOfRange("negative radius")
        r_max = float(self.R_values[-1])
        if r.size and np.nanmax(r) > r_max + 1e-12:
            raise OutOfRange(f"radius above table limit {r_max:.6g}")
        # start from the leading asymptotics and polish with Newton on
        # g(theta) = theta - u(theta) - r^2/2, g' = 1 - u' = R R' > 0
        half = 0.5 * r * r
        th = np.where(r < 1.0, HALF_PI + r * r / 6.0, half + 0.5 / np.maximum(half, 1.0))
        th = np.clip(th, self.theta_min, self.theta_max)
        for _ in range(60):
            g = th - self.u(th) - half
            dg = 1.0 - self.uprime(th)
            step = g / dg
            th_new = np.clip(th - step, self.theta_min, self.theta_max)
            done = np.max(np.abs(th_new - th)) if th.size else 0.0
            th = th_new
            if done < 1e-14 * max(1.0, float(np.max(th)) if th.size else 1.0):
                break
        return th


def _origin_branch(n_nodes: int = 1500):
    """Integrate theta(R) from near the origin to ``_R_SWITCH``."""
    r0 = _R_START
    th0 = HALF_PI + r0 ** 2 / 6.0 + r0 ** 6 / 567.0

    def rhs(r, y):
        return [np.tan(0.5 * r * r - (y[0] - HALF_PI)) / r]

    radii = np.linspace(r0, _R_SWITCH, n_nodes)
    sol = solve_ivp(rhs, (r0, _R_SWITCH), [th0], method="DOP853", rtol=1e-13, atol=1e-15, t_eval=radii)
    if not sol.success:
        raise ToleranceFailure(sol.message)
    theta = sol.y[0]
    psi = 0.5 * radii ** 2 - (theta - HALF_PI)  # pi/2 - u, small near the origin
    u = HALF_PI - psi
    uprime = 1.0 - radii ** 2 / np.tan(psi)
    rprime = radii / np.tan(psi)
    return theta, u, uprime, radii, rprime


def _theta_nodes(theta_start: float, theta_max: float) -> np.ndarray:
    pieces = []
    for lo, hi, h in ((theta_start, 10.0, 0.002), (10.0, 100.0, 0.02), (100.0, np.inf, 0.1)):
        lo = max(lo, theta_start)
        hi = min(hi, theta_max)
        if hi <= lo:
            continue
        n = int(np.ceil((hi - lo) / h))
        pieces.append(np.linspace(lo, hi, n + 1)[:-1])
    pieces.append(np.array([theta_max]))
    return np.concatenate(pieces)


def _u_rhs(theta, y):
    u = y[0]
    return [1.0 - 2.0 * (theta - u) * np.tan(u)]


def _u_jac(theta, y):
    u = y[0]
    return [[2.0 * np.tan(u) - 2.0 * (theta - u) / np.cos(u) ** 2]]


def _integrate_far(theta_start: float, u_start: float, theta_max: float, rtol: float):
    nodes = _theta_nodes(theta_start, theta_max)

    def leave(theta, y):
        return y[0] * (HALF_PI - y[0])

    leave.terminal = True
    # LSODA switches to BDF once the contraction makes the problem stiff
    sol = solve_ivp(
        _u_rhs, (theta_start, theta_max), [u_start], method="LSODA", jac=_u_jac,
        rtol=rtol, atol=1e-17, t_eval=nodes, events=leave,
    )
    if sol.status == 1 or not (0.0 < u_start < HALF_PI):
        raise SingularityReached("u left (0, pi/2)")
    if not sol.success:
        raise ToleranceFailure(sol.message)
    u = sol.y[0]
    if np.any(u <= 0) or np.any(u >= HALF_PI):
        raise SingularityReached("u left (0, pi/2)")
    r = np.sqrt(2.0 * (nodes - u))
    tan_u = np.tan(u)
    return nodes, u, 1.0 - r * r * tan_u, r, r * tan_u


@lru_cache(maxsize=8)
def integrate_u(theta_max: float = 2010.0, theta_seed: Optional[float] = None,
                seed_order: int = 9, rtol: float = 1e-13) -> SolitonTable:
    """Tabulate the soliton profile on ``[pi/2, theta_max]``.

    Parameters
    ----------
    theta_max : float
        Right end of the table.
    theta_seed : float, optional
        If given, start at this angle from the asymptotic series of order
        ``seed_order`` instead of from the origin.  The table then covers
        ``[theta_seed, theta_max]`` only.
    rtol : float
        Relative tolerance of the stiff integrator.
    """
    if theta_seed is None:
        th_a, u_a, up_a, r_a, rp_a = _origin_branch()
        th_b, u_b, up_b, r_b, rp_b = _integrate_far(th_a[-1], u_a[-1], theta_max, rtol)
        parts = [(th_a, u_a, up_a, r_a, rp_a), (th_b[1:], u_b[1:], up_b[1:], r_b[1:], rp_b[1:])]
        cols = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    else:
        if theta_seed < 4.0:
            raise OutOfRange("the asymptotic seed needs theta_seed >= 4")
        u0 = float(asymptotic_u(theta_seed, seed_order))
        cols = list(_integrate_far(theta_seed, u0, theta_max, rtol))
    return SolitonTable(*cols, theta_max=float(theta_max), theta_seed=theta_seed)


def default_table() -> SolitonTable:
    return integrate_u()


def eval_R(table: SolitonTable, theta) -> np.ndarray:
    """Soliton radius ``R(theta)``."""
    return table.R(theta)


def eval_Rprime(table: SolitonTable, theta) -> np.ndarray:
    return table.Rprime(theta)


def hunsmo_residual(theta, R, Rprime) -> np.ndarray:
    """Residual of ``R^2/2 - theta + arctan(R'/R) = 0``."""
    return 0.5 * R ** 2 - theta + np.arctan(Rprime / R)


# ---------------------------------------------------------------------------
# asymptotic expansion


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Exact coefficients of the large-theta expansion.

    ``R = sqrt(2 theta) * sum_k c[k] (2 theta)^-k``,
    ``R^2 = 2 theta * sum_k cbar[k] (2 theta)^-k``,
    ``u = sum_k u[k] theta^-k`` and
    ``2 theta = R^2 * sum_k ctilde[k] R^(-2k)``.
    All lists start at index 0.
    """

    c: tuple
    cbar: tuple
    u: tuple
    ctilde: tuple

    @property
    def order(self) -> int:
        return len(self.c) - 1

    def as_float(self, name: str = "c") -> np.ndarray:
        return np.array([float(a) for a in getattr(self, name)])


def _u_series(order: int) -> Series:
    # u(x), x = 1/theta, solves 2 (1 - x u) tan u = x + x^3 du/dx
    x = Series.variable(order)
    u = Series.constant(0, order)
    atan = arctan_taylor(order)
    for _ in range(order + 2):
        w = (x + u.derivative().shift(3)) / ((1 - x * u) * 2)
        u = w.compose(atan)
    return u


@lru_cache(maxsize=None)
def expansion_coefficients(order: int) -> ExpansionCoefficients:
    """Coefficients up to ``(2 theta)^-order`` by truncated series arithmetic."""
    if order < 1:
        raise ValueError("order must be >= 1")
    n = order + 1
    u = _u_series(n)
    x = Series.variable(n)
    r2_rel = 1 - x * u  # R^2 / (2 theta) in powers of x = 2 z, z = 1/(2 theta)
    r_rel = r2_rel.sqrt()
    scale = [Fraction(2) ** k for k in range(order + 1)]
    c = tuple(r_rel[k] * scale[k] for k in range(order + 1))
    cbar = tuple(r2_rel[k] * scale[k] for k in range(order + 1))
    # invert w = y * (1 + sum cbar_k y^-k): with a = 1/y and b = 1/w the
    # map b = a / g(a) is reverted, and y / w = b / a(b)
    g = Series([r2_rel[k] * Fraction(2) ** k for k in range(n + 1)], n)
    a_of_b = (Series.variable(n) / g).reversion()
    ratio = _shift_down(a_of_b).reciprocal()
    ctilde = tuple(ratio[k] for k in range(order + 1))
    return ExpansionCoefficients(c=c, cbar=cbar, u=tuple(u[k] for k in range(order + 1)), ctilde=ctilde)


def _shift_down(s: Series) -> Series:
    """Divide a series with zero constant term by the variable."""
    if s[0] != 0:
        raise ValueError("constant term must vanish")
    return Series(s.coeffs[1:], s.order)


def asymptotic_u(theta, order: int) -> np.ndarray:
    """``u`` from its asymptotic series truncated after ``theta^-order``."""
    co = expansion_coefficients(order + 1).u
    th = np.asarray(theta, dtype=float)
    x = 1.0 / th
    out = np.zeros_like(th)
    for k in range(order, 0, -1):
        out = (out + float(co[k])) * x
    return out


def eval_R_expansion(coeffs: ExpansionCoefficients, theta, order: int):
    """Truncated expansion of ``R`` and ``R'``.

    Returns
    -------
    R, Rprime : ndarray
        ``sqrt(2 theta) sum_{k<=order} c_k (2 theta)^-k`` and its derivative.
    """
    if order > coeffs.order:
        raise ValueError("not enough coefficients")
    th = np.asarray(theta, dtype=float)
    y = 2.0 * th
    R = np.zeros_like(th)
    Rp = np.zeros_like(th)
    for k in range(order + 1):
        ck = float(coeffs.c[k])
        R = R + ck * y ** (0.5 - k)
        Rp = Rp + ck * (1 - 2 * k) * y ** (-0.5 - k)
    return R, Rp


# ---------------------------------------------------------------------------
# quantities in the tip frame


@dataclass(frozen=True)
class TauQuantities:
    """Scale quantities at time ``t < 0``.

    ``tau = -4 t``; ``R = R(-2t)`` is the tip radius, ``eps = 1/R``,
    ``R_theta = R'(-2t)`` and ``eps_prime = d eps / dt = 2 R_theta / R^2``.
    """

    t: float
    tau: float
    R: float
    eps: float
    R_theta: float
    eps_prime: float


def tau_quantities(t: float, table: Optional[SolitonTable] = None) -> TauQuantities:
    if t >= -HALF_PI / 2:
        raise OutOfRange("t must satisfy -2t > pi/2")
    table = table or default_table()
    theta = -2.0 * t
    R = float(table.R(theta))
    Rt = float(table.Rprime(theta))
    return TauQuantities(t=float(t), tau=-4.0 * t, R=R, eps=1.0 / R, R_theta=Rt, eps_prime=2.0 * Rt / R ** 2)
