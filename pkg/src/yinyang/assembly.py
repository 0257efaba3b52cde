"""Approximate solution: soliton arms, transition graphs and the cap.

Tip-frame coordinates ``Z = (u, v)`` are defined by

    X = e^{-tJ} (R e1 + Z / R),    Z = R (e^{tJ} X - R e1),

with ``R = R(-2t)``.  The leaves ``Y(theta) = R(theta - t + y) E1(theta)``
with ``|y| <= pi/2`` are exact rotating solutions; ``y = +pi/2`` is the
outer arm (larger radius, ``u ~ +pi/2`` near the tip) and ``y = -pi/2``
the inner one.  Near the tip a leaf is the graph ``u = U_y(t, v)``.

The closed approximate curve, traversed counterclockwise, is

    outer arm from the origin -> transition graph u = k_+(v)
    -> cap (p increasing) -> transition graph u = k_-(v)
    -> inner arm back to the origin,

where ``k_pm = eta U_pm + (1 - eta) h_pm`` blends the leaf with the
asymptotic form ``h_pm`` of the cap end over ``K ln tau / 2 <= -v <= 2 K ln tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .cap import cap_shape
from .core import SampledCurve, rotate, segment_lengths, unit_vector
from .errors import NoRoot, OutOfRange
from .soliton import HALF_PI, SolitonTable, TauQuantities, default_table, tau_quantities


# ---------------------------------------------------------------------------
# frames and leaves


class ZFrame:
    """Rescaled rotating frame centred at the tip at time ``t``."""

    def __init__(self, t: float, soliton: Optional[SolitonTable] = None):
        self.table = soliton or default_table()
        self.tq: TauQuantities = tau_quantities(t, self.table)
        self.t = float(t)

    @property
    def R(self) -> float:
        return self.tq.R

    def to_Z(self, X) -> np.ndarray:
        local = rotate(np.asarray(X, dtype=float), self.t)
        return self.R * (local - np.array([self.R, 0.0]))

    def from_Z(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        local = np.array([self.R, 0.0]) + Z / self.R
        return rotate(local, -self.t)


def leaf_point(theta, t: float, y: float, soliton: Optional[SolitonTable] = None) -> np.ndarray:
    """Point of leaf ``y`` at polar angle ``theta``: ``R(theta - t + y) E1(theta)``."""
    table = soliton or default_table()
    theta = np.asarray(theta, dtype=float)
    r = table.R(theta - t + y)
    return r[..., None] * unit_vector(theta)


@dataclass(frozen=True)
class LeafGraph:
    """Leaf ``y`` as a graph ``u = U(v)`` in the tip frame, with derivatives."""

    y: float
    v: np.ndarray
    U: np.ndarray
    U_v: np.ndarray
    U_vv: np.ndarray
    U_t: np.ndarray


def _leaf_equation(u, v, y, t, R2, table):
    """Residual of the leaf condition and its partial derivatives.

    ``R(alpha)^2 = 2 (alpha - u_s(alpha))`` turns ``|e^{tJ} X| = R(alpha)``
    into an O(1) equation free of cancellation between large radii.
    """
    us0 = table.u(-2.0 * t)
    a = R2 + u
    d = a * a + v * v
    phi = np.arctan2(v, a)
    alpha = phi - 2.0 * t + y
    if np.any(alpha < HALF_PI):
        raise OutOfRange("leaf point beyond the origin")
    us = table.u(alpha)
    usp = table.uprime(alpha)
    res = 2.0 * u + (u * u + v * v) / R2 - 2.0 * phi - 2.0 * y + 2.0 * (us - us0)
    phi_u = -v / d
    phi_v = a / d
    res_u = 2.0 + 2.0 * u / R2 + 2.0 * (usp - 1.0) * phi_u
    res_v = 2.0 * v / R2 + 2.0 * (usp - 1.0) * phi_v
    return res, res_u, res_v, (phi_u, usp, alpha)


def _solve_leaf(v, y, t, tq, table, tol=1e-12):
    R2 = tq.R ** 2
    u = np.full_like(v, float(y))
    for _ in range(50):
        res, res_u, _, _ = _leaf_equation(u, v, y, t, R2, table)
        step = res / res_u
        u = u - step
        if np.max(np.abs(step)) < tol:
            # quadratic convergence: one more step reaches rounding level
            res, res_u, _, _ = _leaf_equation(u, v, y, t, R2, table)
            u = u - res / res_u
            break
    else:
        raise NoRoot("leaf graph Newton iteration did not converge")
    return u


def leaf_as_uv_graph(y: float, t: float, v, soliton: Optional[SolitonTable] = None,
                     dv: float = 1e-3) -> LeafGraph:
    """Solve for ``u = U_y(t, v)`` with ``U_v`` and ``U_t`` by implicit
    differentiation and ``U_vv`` by central differences of ``U_v`` (step ``dv``).
    """
    table = soliton or default_table()
    tq = tau_quantities(t, table)
    v = np.atleast_1d(np.asarray(v, dtype=float))

    def graph_and_slopes(vv):
        u = _solve_leaf(vv, y, t, tq, table)
        R2 = tq.R ** 2
        _, res_u, res_v, (phi_u, usp, alpha) = _leaf_equation(u, vv, y, t, R2, table)
        return u, -res_v / res_u, res_u, usp

    U, U_v, res_u, usp = graph_and_slopes(v)
    _, Uv_plus, _, _ = graph_and_slopes(v + dv)
    _, Uv_minus, _, _ = graph_and_slopes(v - dv)
    U_vv = (Uv_plus - Uv_minus) / (2.0 * dv)
    # time derivative: R^2, u_s(-2t) and alpha all move with t
    R2 = tq.R ** 2
    dR2 = -4.0 * tq.R * tq.R_theta
    a = R2 + U
    d = a * a + v * v
    phi_R2 = -v / d
    usp0 = table.uprime(-2.0 * t)
    res_t = (-(U * U + v * v) / R2 ** 2 * dR2 - 2.0 * phi_R2 * dR2
             + 2.0 * usp * (phi_R2 * dR2 - 2.0) + 4.0 * usp0)
    U_t = -res_t / res_u
    return LeafGraph(y=float(y), v=v, U=U, U_v=U_v, U_vv=U_vv, U_t=U_t)


# ---------------------------------------------------------------------------
# blending


def eta(x, derivatives: bool = False):
    """Smooth step: 0 for ``x <= 1/2``, 1 for ``x >= 2``.

    ``eta = 1 / (1 + exp(1/s - 1/(1-s)))`` with ``s = (x - 1/2) / (3/2)``.
    With ``derivatives=True`` also returns the first two x-derivatives.
    """
    x = np.asarray(x, dtype=float)
    s = (x - 0.5) / 1.5
    inside = (s > 0) & (s < 1)
    sc = np.where(inside, s, 0.5)
    w = 1.0 / (1.0 - sc) - 1.0 / sc
    e = np.where(inside, 0.5 * (1.0 + np.tanh(0.5 * w)), np.where(s >= 1, 1.0, 0.0))
    if not derivatives:
        return e
    w1 = 1.0 / (1.0 - sc) ** 2 + 1.0 / sc ** 2
    w2 = 2.0 / (1.0 - sc) ** 3 - 2.0 / sc ** 3
    g = e * (1.0 - e)
    d1 = np.where(inside, g * w1 / 1.5, 0.0)
    d2 = np.where(inside, g * ((1.0 - 2.0 * e) * w1 * w1 + w2) / 2.25, 0.0)
    return e, d1, d2


def h_pm(sign: int, t: float, v, soliton: Optional[SolitonTable] = None):
    """Asymptotic cap end ``h = sign pi/2 - (v^2/2 - v + pi^2/8) / tau``.

    Returns ``h, h_v, h_vv, h_t``.
    """
    tau = -4.0 * t
    v = np.asarray(v, dtype=float)
    P = 0.5 * v * v - v + np.pi ** 2 / 8.0
    h = sign * HALF_PI - P / tau
    h_v = -(v - 1.0) / tau
    h_vv = np.full_like(v, -1.0 / tau)
    h_t = -4.0 * P / tau ** 2
    return h, h_v, h_vv, h_t


@dataclass(frozen=True)
class GraphFunction:
    """A transition graph ``u = k(t, v)`` with its derivatives."""

    v: np.ndarray
    k: np.ndarray
    k_v: np.ndarray
    k_vv: np.ndarray
    k_t: np.ndarray


def band_limits(tau: float, K: float) -> Tuple[float, float]:
    """``-v`` range of the transition band."""
    return 0.5 * K * np.log(tau), 2.0 * K * np.log(tau)


def interpolant_k(sign: int, t: float, v, K: float = 10.0,
                  soliton: Optional[SolitonTable] = None) -> GraphFunction:
    """``k = eta U + (1 - eta) h`` with ``eta`` evaluated at ``-v / (K ln tau)``."""
    table = soliton or default_table()
    v = np.atleast_1d(np.asarray(v, dtype=float))
    tau = -4.0 * t
    L = K * np.log(tau)
    leaf = leaf_as_uv_graph(sign * HALF_PI, t, v, table)
    h, h_v, h_vv, h_t = h_pm(sign, t, v)
    x = -v / L
    e, e1, e2 = eta(x, derivatives=True)
    x_v = -1.0 / L
    # d/dt (1 / ln tau) = 4 / (tau ln^2 tau)
    x_t = -v / K * 4.0 / (tau * np.log(tau) ** 2)
    gap = leaf.U - h
    k = h + e * gap
    k_v = e1 * x_v * gap + e * leaf.U_v + (1.0 - e) * h_v
    k_vv = (e2 * x_v ** 2 * gap + 2.0 * e1 * x_v * (leaf.U_v - h_v)
            + e * leaf.U_vv + (1.0 - e) * h_vv)
    k_t = e1 * x_t * gap + e * leaf.U_t + (1.0 - e) * h_t
    return GraphFunction(v=v, k=k, k_v=k_v, k_vv=k_vv, k_t=k_t)


# ---------------------------------------------------------------------------
# adaptive sampling of piecewise-parametrized curves


@dataclass
class Piece:
    """A parametrized piece ``q -> points`` with a fine reference grid."""

    tag: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    q_fine: np.ndarray
    keep_first: bool = True
    points_fine: np.ndarray = field(init=False)

    def __post_init__(self):
        self.points_fine = self.evaluate(self.q_fine)


def spacing_target(points: np.ndarray, closed: bool, h_max: float, c_kappa: float,
                   gradation: float, h_min: float = 0.0, h_origin: Optional[float] = None,
                   r_origin: float = 2.0) -> np.ndarray:
    """Node spacing about ``min(h_max, c_kappa / |kappa|)`` limited to grow by
    at most ``gradation`` per unit length along the curve.

    ``h_origin`` adds the radial cap ``h_origin (1 + (r / r_origin)^4)``,
    fine near the origin where the spiral's curvature varies on unit scale.
    The caps are merged as a smooth minimum (4-norm of the node densities):
    kinks in the spacing show up as first-order errors of the three-point
    difference operators used by the flow.
    """
    seg = segment_lengths(points, closed)
    d_prev = np.roll(seg, 1) if closed else np.concatenate([[seg[0]], seg])
    d_next = seg if closed else np.concatenate([seg, [seg[-1]]])
    a = np.roll(points, 1, axis=0) if closed else np.vstack([points[:1], points[:-1]])
    b = np.roll(points, -1, axis=0) if closed else np.vstack([points[1:], points[-1:]])
    # curvature of the circle through three consecutive samples
    e1 = points - a
    e2 = b - points
    cr = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    chord = np.hypot(*(b - a).T)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(d_prev * d_next * chord > 0, 2.0 * cr / (d_prev * d_next * chord), 0.0)
    if not closed:
        kappa[0], kappa[-1] = kappa[1], kappa[-2]
    density = (1.0 / h_max) ** 4 + (kappa / c_kappa) ** 4
    if h_origin is not None:
        r = np.hypot(points[:, 0], points[:, 1])
        density = density + (h_origin * (1.0 + (r / r_origin) ** 4)) ** -4.0
    h = np.maximum(density ** -0.25, h_min)
    return limit_growth(h, seg, closed, gradation)


def limit_growth(h: np.ndarray, seg: np.ndarray, closed: bool, gradation: float) -> np.ndarray:
    """Largest ``g <= h`` with ``|g_i - g_j| <= gradation * dist(i, j)``.

    ``min_j (h_j + gradation |s_i - s_j|)`` split into two running minima.
    Closed curves are unrolled over three laps.
    """
    if closed:
        n = h.size
        s = np.concatenate([[0.0], np.cumsum(np.tile(seg, 3))])[: 3 * n]
        hh = np.tile(h, 3)
    else:
        s = np.concatenate([[0.0], np.cumsum(seg)])
        hh = h
    fwd = np.minimum.accumulate(hh - gradation * s) + gradation * s
    bwd = (np.minimum.accumulate((hh + gradation * s)[::-1]))[::-1] - gradation * s
    out = np.minimum(fwd, bwd)
    if closed:
        out = out[n: 2 * n]
    return out


def sample_pieces(pieces: Sequence[Piece], closed: bool, h_max: float, c_kappa: float,
                  gradation: float, min_nodes: int = 0, h_origin: Optional[float] = None,
                  r_origin: float = 2.0):
    """Pick nodes with spacing ``spacing_target`` and evaluate them exactly.

    Returns
    -------
    points : (n, 2) array
    tags : list of (tag, q_first, q_last, start, stop)
    """
    fine_pts, owner, qs = [], [], []
    for j, pc in enumerate(pieces):
        sl = slice(0, None) if pc.keep_first or j == 0 else slice(1, None)
        fine_pts.append(pc.points_fine[sl])
        owner.append(np.full(pc.q_fine[sl].size, j))
        qs.append(pc.q_fine[sl])
    P = np.vstack(fine_pts)
    owner = np.concatenate(owner)
    qs = np.concatenate(qs)
    # repeated junction points are kept as zero-length intervals, so every
    # node falls strictly inside one piece; the spacing is computed without them
    seg = segment_lengths(P, False)
    keep = np.concatenate([[True], seg > 1e-13])
    h = spacing_target(P[keep], closed, h_max, c_kappa, gradation, h_origin=h_origin, r_origin=r_origin)
    h = h[np.cumsum(keep) - 1]
    seg = segment_lengths(P, closed)
    # monitor coordinate m = int ds / h (trapezoid)
    inc = seg * 0.5 * (1.0 / h + 1.0 / np.roll(h, -1)) if closed else seg * 0.5 * (1.0 / h[:-1] + 1.0 / h[1:])
    m = np.concatenate([[0.0], np.cumsum(inc)])
    total = m[-1]
    if closed:
        n = max(int(np.ceil(total)), min_nodes, 8)
        levels = np.arange(n) * (total / n)
    else:
        n = max(int(np.ceil(total)) + 1, min_nodes, 3)
        levels = np.linspace(0.0, total, n)
    m_nodes = m[:-1] if closed else m
    idx = np.clip(np.searchsorted(m_nodes, levels, side="right") - 1, 0, m.size - 2)
    # nodes always land inside a fine interval of a single piece
    nxt = np.minimum(idx + 1, owner.size - 1)
    same = owner[nxt] == owner[idx]
    frac = np.where(m[idx + 1] > m[idx], (levels - m[idx]) / np.maximum(m[idx + 1] - m[idx], 1e-300), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    q = np.where(same, qs[idx] + frac * (qs[nxt] - qs[idx]), qs[idx])
    piece_of = owner[idx]
    out_pts = np.empty((n, 2))
    for j, pc in enumerate(pieces):
        sel = piece_of == j
        if np.any(sel):
            out_pts[sel] = pc.evaluate(q[sel])
    tags = []
    for j, pc in enumerate(pieces):
        sel = np.nonzero(piece_of == j)[0]
        if sel.size:
            tags.append((pc.tag, float(q[sel[0]]), float(q[sel[-1]]), int(sel[0]), int(sel[-1]) + 1))
    # drop nodes that coincide with their predecessor (junctions)
    d = np.hypot(*np.diff(out_pts, axis=0).T)
    keep = np.concatenate([[True], d > 1e-12])
    if closed and np.hypot(*(out_pts[0] - out_pts[-1])) <= 1e-12:
        keep[-1] = False
    if not np.all(keep):
        new_index = np.cumsum(keep) - 1
        out_pts = out_pts[keep]
        tags = [(tg, q0, q1, int(new_index[a]), int(new_index[b - 1]) + 1) for tg, q0, q1, a, b in tags]
    return out_pts, tags


# ---------------------------------------------------------------------------
# arms


def _arm_alpha_grid(alpha_lo: float, alpha_hi: float, ds: float) -> np.ndarray:
    """Fine grid in the soliton argument with arclength steps about ``ds``.

    Uses ``beta = (2 alpha)^{3/2} / 3`` (arclength to leading order) away
    from the origin and a radius grid near it.
    """
    lo = max(alpha_lo, HALF_PI)
    beta = lambda a: (2.0 * a) ** 1.5 / 3.0
    n = max(int(np.ceil((beta(alpha_hi) - beta(lo)) / ds)), 4)
    b = np.linspace(beta(lo), beta(alpha_hi), n + 1)
    grid = 0.5 * (3.0 * b) ** (2.0 / 3.0)
    grid[0], grid[-1] = lo, alpha_hi
    return grid


def arm_piece(sign: int, t: float, alpha_lo: float, alpha_hi: float, table: SolitonTable,
              ds: float, tag: str, reverse: bool = False) -> Piece:
    """Soliton branch ``y = sign pi/2`` parametrized by ``alpha = theta - t + y``.

    Near the origin ``R(alpha)`` has a square-root singularity, so the
    piece is parametrized by ``q = sqrt(alpha - pi/2)`` there.
    """
    y = sign * HALF_PI

    def evaluate(q):
        a = HALF_PI + q * q
        r = table.R(a)
        return r[:, None] * unit_vector(a + t - y)

    a_grid = _arm_alpha_grid(alpha_lo, alpha_hi, ds)
    # refine near the origin where R ~ sqrt(6 (alpha - pi/2))
    if alpha_lo <= HALF_PI + 1e-12:
        q_near = np.linspace(0.0, np.sqrt(min(alpha_hi, 3.0) - HALF_PI), 400)
        q_far = np.sqrt(a_grid[a_grid > min(alpha_hi, 3.0)] - HALF_PI)
        q = np.concatenate([q_near, q_far])
    else:
        q = np.sqrt(a_grid - HALF_PI)
    if reverse:
        q = q[::-1]
    return Piece(tag, evaluate, q)


# ---------------------------------------------------------------------------
# the approximate solution


@dataclass(frozen=True)
class Segment:
    tag: str
    param_range: Tuple[float, float]
    start: int
    stop: int


@dataclass(frozen=True)
class AssembledCurve:
    """Approximate solution at one time.

    ``segments`` name the pieces in traversal order: ``arm+``,
    ``transition+``, ``cap``, ``transition-``, ``arm-`` (parameters:
    ``sqrt(alpha - pi/2)`` on arms, ``v`` on transitions, ``p`` on the cap).
    A windowed curve is open and ends on the ray at lab angle ``theta_window``.
    """

    t: float
    points: np.ndarray
    segments: Tuple[Segment, ...]
    closed: bool = True
    theta_window: Optional[float] = None
    K: float = 10.0

    def curve(self) -> SampledCurve:
        return SampledCurve(self.points, closed=self.closed)

    def segment(self, tag: str) -> Segment:
        for s in self.segments:
            if s.tag == tag:
                return s
        raise KeyError(tag)

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "segments": [{"tag": s.tag, "param_range": list(s.param_range)} for s in self.segments],
            "points": self.points.tolist(),
        }


def cap_parameter_limit(tau: float, K: float, B: float = -1.0) -> float:
    """``p`` at which the cap reaches ``v = -K ln tau / 2``."""
    target = 0.5 * K * np.log(tau)
    p = target + np.log(2.0)
    for _ in range(50):
        _, _, _, _, _, _, _, Z, Zp, _, _ = cap_shape(np.array([p]), tau, B)
        g = -Z[0, 1] - target
        dp = g / -Zp[0, 1]
        p -= dp
        if abs(dp) < 1e-13:
            break
    return float(p)


def _transition_piece(sign: int, t: float, frame: ZFrame, K: float, table, dv: float, tag: str) -> Piece:
    lo, hi = band_limits(frame.tq.tau, K)

    def evaluate(v):
        g = interpolant_k(sign, t, v, K, table)
        return frame.from_Z(np.column_stack([g.k, v]))

    n = max(int(np.ceil((hi - lo) / dv)), 8)
    v = np.linspace(-hi, -lo, n + 1)
    if sign < 0:
        v = v[::-1]
    return Piece(tag, evaluate, v)


def _cap_piece(frame: ZFrame, p_lim: float, B: float, dp: float) -> Piece:
    tau = frame.tq.tau

    def evaluate(p):
        Z = cap_shape(np.asarray(p, dtype=float), tau, B)[7]
        return frame.from_Z(Z)

    n = max(int(np.ceil(2 * p_lim / dp)), 16)
    return Piece("cap", evaluate, np.linspace(-p_lim, p_lim, n + 1))


def _band_alpha(sign: int, t: float, frame: ZFrame, K: float, table) -> float:
    """Soliton argument where the transition meets the arm."""
    v_end = -band_limits(frame.tq.tau, K)[1]
    leaf = leaf_as_uv_graph(sign * HALF_PI, t, np.array([v_end]), table)
    a = frame.R ** 2 + leaf.U[0]
    phi = np.arctan2(v_end, a)
    return float(phi - 2.0 * t + sign * HALF_PI)


def build_approximate_solution(t: float, K: float = 10.0, h_max: float = 0.5, c_kappa: float = 0.1,
                               gradation: float = 0.15, soliton: Optional[SolitonTable] = None,
                               B: float = -1.0, theta_window: Optional[float] = None) -> AssembledCurve:
    """Assemble the approximate solution ``C*(t)``.

    Parameters
    ----------
    t : float
        Time, ``t <= -25``.
    K : float
        Transition band constant.
    h_max, c_kappa, gradation : float
        Node spacing is ``min(h_max, c_kappa / |kappa|)`` with growth limited
        to ``gradation`` per unit length.
    theta_window : float, optional
        If given, keep only the part of the curve with lab polar angle at
        least ``theta_window`` (measured along the spiral) and return an
        open curve whose ends lie on that ray.
    """
    if t > -25:
        raise OutOfRange("t must be <= -25")
    table = soliton or default_table()
    frame = ZFrame(t, table)
    tau = frame.tq.tau
    ds_fine = min(0.1, h_max / 4.0)
    p_lim = cap_parameter_limit(tau, K, B)
    a_out = _band_alpha(+1, t, frame, K, table)
    a_in = _band_alpha(-1, t, frame, K, table)
    if theta_window is None:
        lo_out = lo_in = HALF_PI
    else:
        lo_out = theta_window - t + HALF_PI
        lo_in = theta_window - t - HALF_PI
        if lo_in < HALF_PI or lo_out >= a_out or lo_in >= a_in:
            raise OutOfRange("window must start between the origin and the transition band")
    # transition nodes are ~1/R apart in the plane for dv ~ 1
    dv = min(1.0, ds_fine * frame.R)
    dp = min(0.05, ds_fine * frame.R)
    pieces = [
        arm_piece(+1, t, lo_out, a_out, table, ds_fine, "arm+"),
        _transition_piece(+1, t, frame, K, table, dv, "transition+"),
        _cap_piece(frame, p_lim, B, dp),
        _transition_piece(-1, t, frame, K, table, dv, "transition-"),
        arm_piece(-1, t, lo_in, a_in, table, ds_fine, "arm-", reverse=True),
    ]
    closed = theta_window is None
    if closed:
        # the inner arm ends at the origin, where the outer arm starts
        pc = pieces[-1]
        pieces[-1] = Piece(pc.tag, pc.evaluate, pc.q_fine[:-1])
    pts, tags = sample_pieces(pieces, closed, h_max, c_kappa, gradation)
    segments = tuple(Segment(tag, (q0, q1), a, b) for tag, q0, q1, a, b in tags)
    return AssembledCurve(t=float(t), points=pts, segments=segments, closed=closed,
                          theta_window=theta_window, K=float(K))


def omega_boundary(t: float, h_max: float = 0.5, c_kappa: float = 0.1, gradation: float = 0.15,
                   soliton: Optional[SolitonTable] = None, theta_window: Optional[float] = None):
    """Boundary of ``Omega(t) = {t <= theta <= -t, R(theta-t-pi/2) <= r <= R(theta-t+pi/2)}``.

    The lower radius is taken as 0 where its argument is below ``pi/2``, so
    the region is bounded by the outer branch, the radial segment at
    ``theta = -t`` and the inner branch, which meet at the origin.
    Returns a closed :class:`SampledCurve` (or an open window).
    """
    table = soliton or default_table()
    a_tip_out = -2.0 * t + HALF_PI
    a_tip_in = -2.0 * t - HALF_PI
    if theta_window is None:
        lo_out = lo_in = HALF_PI
    else:
        lo_out = theta_window - t + HALF_PI
        lo_in = theta_window - t - HALF_PI
    ds_fine = min(0.1, h_max / 4.0)
    r_out = float(table.R(a_tip_out))
    r_in = float(table.R(a_tip_in))
    direction = unit_vector(-t)

    def radial(q):
        return np.asarray(q, dtype=float)[:, None] * direction[None, :]

    n_rad = max(int(np.ceil((r_out - r_in) / min(ds_fine, 0.01))), 8)
    pieces = [
        arm_piece(+1, t, lo_out, a_tip_out, table, ds_fine, "arm+"),
        Piece("segment", radial, np.linspace(r_out, r_in, n_rad + 1)),
        arm_piece(-1, t, lo_in, a_tip_in, table, ds_fine, "arm-", reverse=True),
    ]
    closed = theta_window is None
    if closed:
        pc = pieces[-1]
        pieces[-1] = Piece(pc.tag, pc.evaluate, pc.q_fine[:-1])
    pts, _ = sample_pieces(pieces, closed, h_max, c_kappa, gradation)
    return SampledCurve(pts, closed=closed)
