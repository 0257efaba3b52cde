"""Curve shortening deficit ``(V - kappa) ds`` of moving curves.

For a family ``X(t, p)`` the deficit density is

    W = <X_t - X_pp / |X_p|^2, J X_p>,     |V - kappa| ds = |W| dp.

It vanishes exactly when the family moves by curve shortening (up to
tangential reparametrization).  Three evaluations are provided: the general
parametric one from sampled curves, the closed form on the cap in tip-frame
coordinates, and the closed form for graphs ``u = k(t, v)`` in the
transition bands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .assembly import band_limits, cap_parameter_limit, interpolant_k
from .cap import CapProfile, build_cap, grim_reaper
from .core import SampledCurve, cross, parameter_derivatives, perp
from .errors import MismatchedGrids, OutOfRange
from .soliton import SolitonTable, TauQuantities, default_table, tau_quantities

def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def parametric_deficit(curve0: SampledCurve, curve1: SampledCurve, dt: float):
    """Deficit density from two time-adjacent samples with matched parameters.

    ``X_t`` is the forward difference; spatial derivatives are central
    differences on ``curve0`` in its parameter (node index if none).

    Returns
    -------
    W : (n,) array
    l1 : float
        ``int |W| dp`` (trapezoid; periodic for closed curves).
    """
    if len(curve0) != len(curve1) or curve0.closed != curve1.closed:
        raise MismatchedGrids("curves must have the same node count and type")
    if curve0.params is not None and curve1.params is not None and not np.allclose(curve0.params, curve1.params):
        raise MismatchedGrids("parameter grids differ")
    n = len(curve0)
    p = curve0.params if curve0.params is not None else np.arange(n, dtype=float)
    period = None
    if curve0.closed:
        period = curve0.period if curve0.period is not None else (p[-1] - p[0]) * n / (n - 1)
    X = curve0.points
    Xt = (curve1.points - X) / dt
    Xp, Xpp = parameter_derivatives(X, p, curve0.closed, period)
    speed2 = _dot(Xp, Xp)
    W = _dot(Xt, perp(Xp)) - cross(Xp, Xpp) / speed2
    absW = np.abs(W)
    if curve0.closed:
        pp = np.append(p, p[0] + period)
        l1 = _trapezoid(np.append(absW, absW[0]), pp)
    else:
        l1 = _trapezoid(absW, p)
    return W, l1


def z_frame_deficit(Z, Z_p, Z_pp, Z_t, tq: TauQuantities) -> np.ndarray:
    """Deficit of ``X = e^{-tJ}(R e1 + eps Z)`` from tip-frame data.

    ``W = <eps^2 Z_t - Z_pp/|Z_p|^2, J Z_p> - <e1, Z_p> + 2 eps R_theta <e2, Z_p>
    + eps eps' <Z, J Z_p> - eps^2 <Z, Z_p>``.
    """
    eps = tq.eps
    JZp = perp(Z_p)
    return (_dot(eps ** 2 * Z_t - Z_pp / _dot(Z_p, Z_p)[:, None], JZp)
            - Z_p[:, 0] + 2.0 * eps * tq.R_theta * Z_p[:, 1]
            + eps * tq.eps_prime * _dot(Z, JZp) - eps ** 2 * _dot(Z, Z_p))


def cap_deficit_W(profile: CapProfile) -> np.ndarray:
    """Deficit density on the cap, term by term.

    ``W = eps^2 (1 - kappa f) f_t - N / D + kappa (1 - kappa f) - f_p tanh p
    - eps^2 <Z, Z_p> + 2 eps R_theta <e2, Z_p> + eps eps' <Z, J Z_p>`` with
    ``N = kappa + f_pp - 2 kappa^2 f - kappa f f_pp + kappa_p f f_p
    + kappa^3 f^2 + 2 kappa f_p^2`` and ``D = 1 - 2 kappa f + kappa^2 f^2 + f_p^2``.
    """
    tq = profile.tq
    p = profile.p
    _, _, k = grim_reaper(p)
    th = np.tanh(p)
    kp = -k * th
    f, fp, fpp, ft = profile.f, profile.f_p, profile.f_pp, profile.f_t
    Z, Zp = profile.Z, profile.Z_p
    num = k + fpp - 2.0 * k * k * f - k * f * fpp + kp * f * fp + k ** 3 * f * f + 2.0 * k * fp * fp
    den = 1.0 - 2.0 * k * f + k * k * f * f + fp * fp
    eps = tq.eps
    return (eps ** 2 * (1.0 - k * f) * ft - num / den + k * (1.0 - k * f) - fp * th
            - eps ** 2 * _dot(Z, Zp) + 2.0 * eps * tq.R_theta * Zp[:, 1]
            + eps * tq.eps_prime * _dot(Z, perp(Zp)))


def graph_deficit_Wv(k, k_v, k_vv, k_t, v, tq: TauQuantities) -> np.ndarray:
    """Deficit density per unit ``v`` of the graph ``u = k(t, v)``.

    ``W_v = -k_t/R^2 + k_vv/(1 + k_v^2) - k_v + 2 R_theta/R
    + 2 (R_theta/R^3)(v k_v - k) - (v + k k_v)/R^2``.
    """
    R = tq.R
    Rt = tq.R_theta
    return (-k_t / R ** 2 + k_vv / (1.0 + k_v * k_v) - k_v + 2.0 * Rt / R
            + 2.0 * (Rt / R ** 3) * (v * k_v - k) - (v + k * k_v) / R ** 2)


# ---------------------------------------------------------------------------
# per-time reports and the time-integrated error


@dataclass(frozen=True)
class DeficitReport:
    """Deficit of the approximate solution at one time.

    ``per_segment`` maps a segment tag to ``(sup |W|, int |W|)``.  The arms
    are exact rotating solutions and report zero.
    """

    t: float
    tau: float
    per_segment: Dict[str, Tuple[float, float]]
    total_l1: float
    cap_sup_full: float = float("nan")

    def row(self) -> dict:
        cap = self.per_segment["cap"]
        trans = self.per_segment["transition+"][1] + self.per_segment["transition-"][1]
        return {"t": self.t, "tau": self.tau, "cap_sup": self.cap_sup_full, "cap_l1": cap[1],
                "trans_l1": trans, "total_l1": self.total_l1}


def transition_deficit(sign: int, t: float, K: float = 10.0, n_nodes: int = 2001,
                       soliton: Optional[SolitonTable] = None):
    """``W_v[k_sign]`` on the band ``K ln tau / 2 <= -v <= 2 K ln tau``."""
    table = soliton or default_table()
    tq = tau_quantities(t, table)
    lo, hi = band_limits(tq.tau, K)
    v = -np.linspace(lo, hi, n_nodes)
    g = interpolant_k(sign, t, v, K, table)
    return v, graph_deficit_Wv(g.k, g.k_v, g.k_vv, g.k_t, v, tq)


def deficit_report(t: float, K: float = 10.0, n_cap: int = 8001, n_band: int = 2001,
                   soliton: Optional[SolitonTable] = None, B: float = -1.0) -> DeficitReport:
    """Sup and L1 deficit of each segment of the approximate solution.

    The cap contributes over the part it occupies in the assembled curve
    (``-v <= K ln tau / 2``); ``cap_sup_full`` is the sup over the whole
    range ``|p| <= 2 K ln tau``.
    """
    table = soliton or default_table()
    tq = tau_quantities(t, table)
    full = build_cap(t, K, n_cap, table, B)
    W_full = cap_deficit_W(full)
    p_lim = cap_parameter_limit(tq.tau, K, B)
    used = build_cap(t, K, n_cap, table, B, p_max=p_lim)
    W_cap = np.abs(cap_deficit_W(used))
    per = {"cap": (float(W_cap.max()), _trapezoid(W_cap, used.p))}
    for sign, tag in ((+1, "transition+"), (-1, "transition-")):
        v, Wv = transition_deficit(sign, t, K, n_band, table)
        a = np.abs(Wv)
        per[tag] = (float(a.max()), _trapezoid(a[::-1], v[::-1]))
    per["arm+"] = (0.0, 0.0)
    per["arm-"] = (0.0, 0.0)
    total = float(sum(v[1] for v in per.values()))
    return DeficitReport(t=float(t), tau=tq.tau, per_segment=per, total_l1=total,
                         cap_sup_full=float(np.abs(W_full).max()))


def geometric_time_grid(t_start: float, t_end: float, ratio: float = 1.1) -> np.ndarray:
    """Times from ``t_start`` to ``t_end`` (both negative) with ``|t|`` in
    geometric progression of the given ratio."""
    if not t_start < t_end < 0:
        raise OutOfRange("need t_start < t_end < 0")
    n = max(int(np.ceil(np.log(t_start / t_end) / np.log(ratio))), 1)
    return -np.geomspace(-t_start, -t_end, n + 1)


def fit_power_law(x: np.ndarray, y: np.ndarray):
    """Least-squares fit ``log y = a + s log x``; returns ``(s, a, s_stderr)``."""
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([np.ones_like(lx), lx])
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    n = lx.size
    if n > 2:
        resid = ly - A @ coef
        s2 = float(resid @ resid) / (n - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        se = float(np.sqrt(cov[1, 1]))
    else:
        se = float("nan")
    return float(coef[1]), float(coef[0]), se


TAIL_MARGIN = 0.1


@dataclass(frozen=True)
class TotalError:
    """Time-integrated deficit ``E = int int |V - kappa| ds dt``.

    ``integral`` covers ``[t_start, t_end]``; ``tail`` extrapolates
    ``(-inf, t_start]`` from the fitted power law ``C |t|^s``, with the
    exponent weakened by ``TAIL_MARGIN`` to stay conservative.
    """

    times: np.ndarray
    reports: Tuple[DeficitReport, ...]
    integral: float
    tail: float
    slope: float
    slope_stderr: float
    intercept: float

    @property
    def total(self) -> float:
        return self.integral + self.tail

    @property
    def per_time(self) -> np.ndarray:
        return np.array([r.total_l1 for r in self.reports])

    def _tail_beyond(self, T: float) -> float:
        s = self.slope + TAIL_MARGIN
        if s >= -1.0:
            return float("inf")
        # match the fitted law at |t| = T, integrate with the weakened exponent
        c = np.exp(self.intercept) * T ** self.slope
        return float(c * T / (-s - 1.0))

    def E(self, T: float) -> float:
        """``int_{-inf}^{-T}`` of the per-time deficit (grid part plus tail)."""
        T = float(T)
        t_first = -float(self.times[0])
        if T >= t_first:
            return self._tail_beyond(T)
        abs_t = -self.times
        vals = self.per_time
        keep = abs_t >= T
        x = np.concatenate([abs_t[keep], [T]])
        y = np.concatenate([vals[keep], [np.interp(T, abs_t[::-1], vals[::-1])]])
        return float(-_trapezoid(y, x)) + self.tail


def total_error(t_start: float, t_end: float, K: float = 10.0, ratio: float = 1.1,
                soliton: Optional[SolitonTable] = None, B: float = -1.0,
                n_cap: int = 8001, n_band: int = 2001) -> TotalError:
    """Integrate the per-time deficit over ``[t_start, t_end]`` and
    extrapolate the tail.

    The per-time deficit is sampled on a grid geometric in ``|t|`` (ratio
    ``ratio``) and integrated by the trapezoid rule.
    """
    if t_end > -25:
        raise OutOfRange("t_end must be <= -25")
    table = soliton or default_table()
    times = geometric_time_grid(t_start, t_end, ratio)
    reports = tuple(deficit_report(t, K, n_cap, n_band, table, B) for t in times)
    vals = np.array([r.total_l1 for r in reports])
    integral = _trapezoid(vals, times)
    slope, icpt, se = fit_power_law(-times, vals)
    out = TotalError(times, reports, float(integral), 0.0, slope, se, icpt)
    tail = out._tail_beyond(-float(t_start))
    return TotalError(times, reports, float(integral), tail, slope, se, icpt)
