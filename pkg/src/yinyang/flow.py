"""Numerical curve shortening flow and its monitors.

The parametric solver moves nodes with the normal velocity only,

    Y_t = Y_ss + omega <J Y, N> N,      Y = exp(omega t J) X,

in a frame rotating at angular speed ``omega`` (``omega = 0`` is the lab
frame; ``omega = 1`` follows the tip of the spiral, where the refined cap
mesh then stays put).  ``Y_ss`` is the three-point second difference in
chord length, taken implicitly, plus an explicit five-point correction for
graded meshes; the frame term is explicit.  Implicit Euler steps are
Richardson-extrapolated to second (or third) order.  Curves are closed
(cyclic system) or open with both ends prescribed.  Nodes are periodically
redistributed along a quintic spline of the current curve.

The kernel works in any ambient dimension (the frame term only in the
plane), which the homotopy module uses for space curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline
from scipy.linalg import solve_banded

from .assembly import HALF_PI, limit_growth, spacing_target
from .core import SampledCurve, enclosed_area, is_simple, rotate, segment_lengths, unit_vector
from .errors import CurvatureBlowup, OutOfRange, PositivityLoss, SelfIntersection, SigmaViolation
from .soliton import SolitonTable, default_table

Boundary = Callable[[float], Tuple[np.ndarray, np.ndarray]]


# ---------------------------------------------------------------------------
# linear algebra


def _solve_tridiagonal(lo, di, up, rhs):
    """Solve with sub-diagonal ``lo[1:]``, diagonal ``di``, super-diagonal ``up[:-1]``."""
    ab = np.zeros((3, di.size))
    ab[0, 1:] = up[:-1]
    ab[1] = di
    ab[2, :-1] = lo[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _solve_cyclic(lo, di, up, rhs):
    """Cyclic tridiagonal solve (``lo[0]`` couples to the last unknown,
    ``up[-1]`` to the first) by Sherman-Morrison."""
    n = di.size
    gamma = -di[0]
    d = di.copy()
    d[0] -= gamma
    d[-1] -= lo[0] * up[-1] / gamma
    y = _solve_tridiagonal(lo, d, up, rhs)
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = up[-1]
    z = _solve_tridiagonal(lo, d, up, u)
    vy = y[0] + lo[0] / gamma * y[-1]
    vz = z[0] + lo[0] / gamma * z[-1]
    return y - np.multiply.outer(z, vy / (1.0 + vz)) if rhs.ndim > 1 else y - z * (vy / (1.0 + vz))


def _chord_laplacian(h_prev, h_next):
    """Weights of the three-point second difference on a nonuniform grid."""
    w = 2.0 / (h_prev + h_next)
    return w / h_prev, w / h_next


def _grading_correction(Y, closed):
    """Explicit fix for the first-order error of the chord Laplacian.

    Three nodes only determine their circumscribed circle, so on a graded
    mesh the chord Laplacian returns the curvature at a point shifted by
    ``(h_next - h_prev) / 3``: its normal part is
    ``kappa + (h_next - h_prev) kappa_s / 3``.  The difference to the
    curvature vector of the five-point polynomial reconstruction is a small
    fraction of the implicit operator, so it is stable as explicit forcing;
    it is dropped where neighbouring cells differ by more than a factor 2.

    Returns the correction and the five-point unit tangent (the three-point
    one within two nodes of open ends).
    """
    x1, x2 = _local_jets(Y, closed, half=2)
    hm = np.linalg.norm(Y - np.roll(Y, 1, axis=0), axis=1)
    hp = np.roll(hm, -1)
    a, c = _chord_laplacian(hm, hp)
    lap = a[:, None] * (np.roll(Y, 1, axis=0) - Y) + c[:, None] * (np.roll(Y, -1, axis=0) - Y)
    sp2 = np.einsum("ij,ij->i", x1, x1)
    v = x2 / sp2[:, None] - lap
    T = x1 / np.sqrt(sp2)[:, None]
    v -= np.einsum("ij,ij->i", v, T)[:, None] * T
    # the reconstruction is only trusted on smoothly graded stencils
    cells = np.stack([np.roll(hm, k) for k in (-1, 0, 1, 2)])
    v[cells.max(axis=0) > 2.0 * cells.min(axis=0)] = 0.0
    if not closed:
        T[:2] = _tangents(Y[:3], False)[:2]
        T[-2:] = _tangents(Y[-3:], False)[-2:]
    return np.nan_to_num(v, nan=0.0), T


def _tangents(Y, closed):
    """Unit tangents from the three-point derivative in chord length, which
    stays second order on graded meshes."""
    if closed:
        hm = np.linalg.norm(Y - np.roll(Y, 1, axis=0), axis=1)[:, None]
        hp = np.linalg.norm(np.roll(Y, -1, axis=0) - Y, axis=1)[:, None]
        d = (hm / (hp * (hm + hp))) * (np.roll(Y, -1, axis=0) - Y) \
            + (hp / (hm * (hm + hp))) * (Y - np.roll(Y, 1, axis=0))
    else:
        d = np.empty_like(Y)
        hm = np.linalg.norm(Y[1:-1] - Y[:-2], axis=1)[:, None]
        hp = np.linalg.norm(Y[2:] - Y[1:-1], axis=1)[:, None]
        d[1:-1] = (hm / (hp * (hm + hp))) * (Y[2:] - Y[1:-1]) + (hp / (hm * (hm + hp))) * (Y[1:-1] - Y[:-2])
        d[0] = Y[1] - Y[0]
        d[-1] = Y[-1] - Y[-2]
    return d / np.linalg.norm(d, axis=1)[:, None]


def implicit_step(Y: np.ndarray, dt: float, closed: bool, forcing: Optional[np.ndarray] = None,
                  ends: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> np.ndarray:
    """One linearly implicit step ``(I - dt D_ss) Y' = Y + dt forcing``.

    ``D_ss`` uses the chord lengths of ``Y``.  Open curves take the end
    positions ``ends`` at the new time.
    """
    h = np.linalg.norm(np.diff(Y, axis=0, append=Y[:1] if closed else None), axis=1) if closed \
        else np.linalg.norm(np.diff(Y, axis=0), axis=1)
    rhs = Y if forcing is None else Y + dt * forcing
    if closed:
        a, c = _chord_laplacian(np.roll(h, 1), h)
        return _solve_cyclic(-dt * a, 1.0 + dt * (a + c), -dt * c, rhs)
    a, c = _chord_laplacian(h[:-1], h[1:])
    lo, di, up = -dt * a, 1.0 + dt * (a + c), -dt * c
    start, stop = ends if ends is not None else (Y[0], Y[-1])
    r = rhs[1:-1].copy()
    r[0] -= lo[0] * start
    r[-1] -= up[-1] * stop
    inner = _solve_tridiagonal(lo, di, up, r)
    return np.vstack([start, inner, stop])


# ---------------------------------------------------------------------------
# redistribution


@dataclass(frozen=True)
class MeshSpec:
    """Node spacing ``min(h_max, c_kappa / |kappa|)``, growth limited by
    ``gradation``; ``n_nodes`` fixes the count instead (spacing shape kept)."""

    h_max: float = 0.5
    c_kappa: float = 0.1
    gradation: float = 0.15
    n_nodes: Optional[int] = None
    h_origin: Optional[float] = None
    r_origin: float = 2.0


def _spline(points: np.ndarray, closed: bool, degree: int = 5):
    """Interpolating spline through the nodes in chord length (quintic by
    default: repeated redistribution with cubics visibly perturbs
    ``sigma`` where the spacing is graded)."""
    if closed:
        loop = np.vstack([points, points[:1]])
    else:
        loop = points
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(loop, axis=0), axis=1))])
    if degree == 3:
        spl = CubicSpline(s, loop, bc_type="periodic" if closed else "not-a-knot", axis=0)
    else:
        spl = make_interp_spline(s, loop, k=degree, bc_type="periodic" if closed else None, axis=0)
    return spl, s


def remesh(points: np.ndarray, closed: bool, spec: MeshSpec, refine: int = 4) -> np.ndarray:
    """Redistribute nodes along a cubic spline through the current nodes.

    Open curves keep both end nodes exactly.
    """
    spl, s = _spline(points, closed)
    total = s[-1]
    m_fine = refine * (points.shape[0] if closed else points.shape[0] - 1)
    s_fine = np.linspace(0.0, total, m_fine + 1)
    P = spl(s_fine[:-1] if closed else s_fine)
    if spec.n_nodes is not None and spec.h_max == np.inf:
        h = np.ones(P.shape[0])
    else:
        h = spacing_target(P, closed, spec.h_max, spec.c_kappa, spec.gradation,
                           h_origin=spec.h_origin, r_origin=spec.r_origin) if P.shape[1] == 2 \
            else _spacing_nd(P, closed, spec)
    if closed:
        h = np.append(h, h[0])
    inc = np.diff(s_fine) * 0.5 * (1.0 / h[:-1] + 1.0 / h[1:])
    m = np.concatenate([[0.0], np.cumsum(inc)])
    if closed:
        n = spec.n_nodes or max(int(np.ceil(m[-1])), 8)
        levels = np.arange(n) * (m[-1] / n)
    else:
        n = spec.n_nodes or max(int(np.ceil(m[-1])) + 1, 3)
        levels = np.linspace(0.0, m[-1], n)
    s_new = np.interp(levels, m, s_fine)
    out = spl(s_new)
    if not closed:
        out[0], out[-1] = points[0], points[-1]
    return out


def _spacing_nd(P: np.ndarray, closed: bool, spec: MeshSpec) -> np.ndarray:
    seg = np.linalg.norm(np.diff(P, axis=0, append=P[:1]) if closed else np.diff(P, axis=0), axis=1)
    T = _tangents(P, closed)
    dT = np.linalg.norm(np.diff(T, axis=0, append=T[:1]) if closed else np.diff(T, axis=0), axis=1)
    kap = dT / np.maximum(seg, 1e-300)
    if not closed:
        kap = np.append(kap, kap[-1])
    h = np.minimum(spec.h_max, spec.c_kappa / np.maximum(kap, 1e-300))
    return limit_growth(h, seg, closed, spec.gradation)


def resample_uniform(points: np.ndarray, closed: bool, n_nodes: int) -> np.ndarray:
    """``n_nodes`` nodes equally spaced in arclength along a cubic spline."""
    spl, s = _spline(points, closed)
    s_new = np.arange(n_nodes) * (s[-1] / n_nodes) if closed else np.linspace(0.0, s[-1], n_nodes)
    out = spl(s_new)
    if not closed:
        out[0], out[-1] = points[0], points[-1]
    return out


# ---------------------------------------------------------------------------
# the stepper


@dataclass
class FlowState:
    """A curve evolving by curve shortening.

    Attributes
    ----------
    t : float
    points : (n, d) array
        Lab-frame nodes; closed curves do not repeat the first node.
    closed : bool
    step_count : int
    boundary : callable, optional
        ``t -> (start, end)`` lab positions of the ends of an open curve.
    frame_rate : float
        Angular speed of the computational frame (planar curves only).
    mesh : MeshSpec, optional
        Redistribution target; ``None`` keeps the nodes as they move.
    diagnostics : DiagnosticsFrame, optional
        Latest monitors.
    exact_sigma : (n,) array, optional
        Analytic ``sigma`` of constructed initial data; dropped after the
        first step.
    order : int
        Order in time of the extrapolated step (1 is plain implicit Euler).
    """

    t: float
    points: np.ndarray
    closed: bool = True
    step_count: int = 0
    boundary: Optional[Boundary] = None
    frame_rate: float = 0.0
    mesh: Optional[MeshSpec] = None
    diagnostics: Optional["DiagnosticsFrame"] = None
    exact_sigma: Optional[np.ndarray] = None
    order: int = 2

    @property
    def curve(self) -> SampledCurve:
        return SampledCurve(self.points, closed=self.closed)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _to_frame(X, angle):
    return X if angle == 0.0 else rotate(X, angle)


def _euler_step(Y: np.ndarray, dt: float, closed: bool, omega: float, ends) -> np.ndarray:
    """Linearly implicit Euler step of the frame equation."""
    forcing, T = _grading_correction(Y, closed)
    if omega != 0.0:
        JY = np.column_stack([-Y[:, 1], Y[:, 0]])
        frame = omega * (JY - np.einsum("ij,ij->i", JY, T)[:, None] * T)
        if not closed:
            frame[[0, -1]] = 0.0
        forcing += frame
    return implicit_step(Y, dt, closed, forcing, ends)


def step_parametric(state: FlowState, dt_max: float, dt: Optional[float] = None) -> FlowState:
    """Advance by one step of length ``dt`` (default ``dt_max``).

    Linearly implicit Euler with ``1, ..., state.order`` substeps, combined
    by polynomial extrapolation in the substep length (order
    ``state.order`` in time).  Extrapolating the implicit Euler step keeps
    its damping of stiff modes.  The frame equation is autonomous, so the
    node sets being combined correspond one to one.
    """
    dt = float(dt_max if dt is None else min(dt, dt_max))
    omega = state.frame_rate
    if omega != 0.0 and state.dim != 2:
        raise OutOfRange("rotating frames need planar curves")
    closed = state.closed
    t0, t1 = state.t, state.t + dt
    Y = _to_frame(state.points, omega * t0)

    def ends_at(t):
        if closed:
            return None
        if state.boundary is None:
            return Y[0], Y[-1]
        a, b = state.boundary(t)
        return (_to_frame(np.asarray(a, float)[None], omega * t)[0],
                _to_frame(np.asarray(b, float)[None], omega * t)[0])

    table = []
    for n in range(1, state.order + 1):
        Z = Y
        for k in range(1, n + 1):
            Z = _euler_step(Z, dt / n, closed, omega, ends_at(t0 + dt * k / n))
        row = [Z]
        for j in range(1, n):
            prev = table[-1][j - 1]
            row.append(row[j - 1] + (row[j - 1] - prev) / (n / (n - j) - 1.0))
        table.append(row)
    Yn = table[-1][-1]
    Xn = _to_frame(Yn, -omega * t1)
    return replace(state, t=t1, points=Xn, step_count=state.step_count + 1, diagnostics=None,
                   exact_sigma=None)


def _max_curvature(points: np.ndarray, closed: bool) -> Tuple[float, float]:
    """Largest turning angle and largest ``turning / cell``."""
    d = np.diff(points, axis=0, append=points[:1]) if closed else np.diff(points, axis=0)
    h = np.hypot(d[:, 0], d[:, 1]) if points.shape[1] == 2 else np.linalg.norm(d, axis=1)
    u = d / h[:, None]
    if closed:
        c = np.einsum("ij,ij->i", u, np.roll(u, 1, axis=0))
        cell = 0.5 * (h + np.roll(h, 1))
    else:
        c = np.einsum("ij,ij->i", u[1:], u[:-1])
        cell = 0.5 * (h[1:] + h[:-1])
    turn = np.arccos(np.clip(c, -1.0, 1.0))
    return float(turn.max()), float(np.max(turn / cell))


def evolve(state: FlowState, t_end: float, dt: float, remesh_every: int = 50,
           callback: Optional[Callable[[FlowState], None]] = None, callback_every: int = 1,
           check_simple_every: int = 0, c_dt: float = 0.5, remesh_turn: float = 0.25) -> FlowState:
    """Step until ``t_end``.

    The step is ``min(dt, c_dt / max kappa^2)`` so fast transients (rounded
    corners) are followed, and the last step lands on ``t_end``.  With a
    mesh, nodes are redistributed every ``remesh_every`` steps and whenever
    the turning angle between segments exceeds ``remesh_turn``.
    ``callback`` sees the state every ``callback_every`` steps and at the end.

    Raises
    ------
    CurvatureBlowup
        If the turning angle stays above 1 rad after redistribution.
    """
    if t_end < state.t:
        raise OutOfRange("t_end is before the current time")
    turn, kmax = _max_curvature(state.points, state.closed)
    while t_end - state.t > 1e-12 * max(1.0, abs(t_end)):
        h = min(dt, c_dt / max(kmax, 1e-300) ** 2, t_end - state.t)
        state = step_parametric(state, h)
        last = t_end - state.t <= 1e-12 * max(1.0, abs(t_end))
        if last:
            state.t = float(t_end)
        turn, kmax = _max_curvature(state.points, state.closed)
        if state.mesh is not None and ((remesh_every and state.step_count % remesh_every == 0)
                                       or turn > remesh_turn):
            state = replace(state, points=remesh(state.points, state.closed, state.mesh))
            turn, kmax = _max_curvature(state.points, state.closed)
        if turn > 1.0:
            raise CurvatureBlowup(f"under-resolved curvature at t = {state.t:.6g}")
        if check_simple_every and state.dim == 2 and state.closed and state.step_count % check_simple_every == 0:
            if not is_simple(state.points):
                raise SelfIntersection(f"curve crosses itself at t = {state.t:.6g}")
        if callback is not None and (state.step_count % callback_every == 0 or last):
            callback(state)
    return state


# ---------------------------------------------------------------------------
# polar graph solver


def step_polar_graph(r: np.ndarray, dtheta: float, dt: float,
                     boundary: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """One semi-implicit step of ``r r_t = (r r_tt - r_t^2)/(r^2 + r_t^2) - 1``.

    The ``r_thetatheta`` term is implicit with frozen coefficient
    ``1/(r^2 + r_theta^2)``; the rest is explicit.  ``boundary`` gives the
    Dirichlet values at the new time; without it the grid is periodic.

    Raises
    ------
    PositivityLoss
        If ``r <= 0`` appears.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise PositivityLoss("r must stay positive")
    periodic = boundary is None
    if periodic:
        rt = (np.roll(r, -1) - np.roll(r, 1)) / (2 * dtheta)
    else:
        rt = np.gradient(r, dtheta)
    q = r * r + rt * rt
    a = 1.0 / q
    rhs = r + dt * (-rt * rt / (r * q) - 1.0 / r)
    w = dt * a / dtheta ** 2
    if periodic:
        out = _solve_cyclic(-w, 1.0 + 2.0 * w, -w, rhs)
    else:
        lo, di, up = -w[1:-1], 1.0 + 2.0 * w[1:-1], -w[1:-1]
        b = rhs[1:-1].copy()
        b[0] -= lo[0] * boundary[0]
        b[-1] -= up[-1] * boundary[1]
        out = np.concatenate([[boundary[0]], _solve_tridiagonal(lo, di, up, b), [boundary[1]]])
    if np.any(out <= 0):
        raise PositivityLoss("r reached zero")
    return out


# ---------------------------------------------------------------------------
# monitors


def turning_angles(points: np.ndarray, closed: bool):
    """Signed turning angle at each node and the dual cell length.

    For open curves the end nodes get ``nan``.
    """
    d = np.diff(points, axis=0, append=points[:1]) if closed else np.diff(points, axis=0)
    h = np.hypot(d[:, 0], d[:, 1])
    phi = np.arctan2(d[:, 1], d[:, 0])
    if closed:
        turn = np.angle(np.exp(1j * (phi - np.roll(phi, 1))))
        cell = 0.5 * (h + np.roll(h, 1))
        return turn, cell, phi, h
    turn = np.full(points.shape[0], np.nan)
    cell = np.full(points.shape[0], np.nan)
    turn[1:-1] = np.angle(np.exp(1j * (phi[1:] - phi[:-1])))
    cell[1:-1] = 0.5 * (h[1:] + h[:-1])
    return turn, cell, phi, h


def discrete_curvature(points: np.ndarray, closed: bool) -> np.ndarray:
    turn, cell, _, _ = turning_angles(points, closed)
    return turn / cell


def curvature_energy(points: np.ndarray, closed: bool) -> float:
    """``int kappa^2 ds`` as ``sum |T_{i+1/2} - T_{i-1/2}|^2 / cell_i``, the
    form for which the scheme's length decay is consistent."""
    d = np.diff(points, axis=0, append=points[:1]) if closed else np.diff(points, axis=0)
    h = np.linalg.norm(d, axis=1)
    T = d / h[:, None]
    if closed:
        dT = T - np.roll(T, 1, axis=0)
        cell = 0.5 * (h + np.roll(h, 1))
    else:
        dT = T[1:] - T[:-1]
        cell = 0.5 * (h[1:] + h[:-1])
    return float(np.sum(np.einsum("ij,ij->i", dT, dT) / cell))


def _lagrange_weights(s: np.ndarray, centre: int):
    """Weights of the first and second derivative at ``s[:, centre]`` of the
    polynomial interpolating values at the rows of ``s``."""
    x = s - s[:, [centre]]
    m = x.shape[1]
    w1 = np.empty_like(x)
    w2 = np.empty_like(x)
    for j in range(m):
        # low-order coefficients of prod_{k != j} (y - x_k) at y = 0
        c0 = np.ones(x.shape[0])
        c1 = np.zeros(x.shape[0])
        c2 = np.zeros(x.shape[0])
        denom = np.ones(x.shape[0])
        for k in range(m):
            if k == j:
                continue
            r = x[:, k]
            c2 = c1 - r * c2
            c1 = c0 - r * c1
            c0 = -r * c0
            denom = denom * (x[:, j] - r)
        w1[:, j] = c1 / denom
        w2[:, j] = 2.0 * c2 / denom
    return w1, w2


def _local_jets(points: np.ndarray, closed: bool, half: int = 3):
    """First and second derivatives at each node from the degree-``2 half``
    polynomial through the ``2 half + 1`` nodes centred on it (chord-length
    parameter).  Open curves get ``nan`` within ``half`` nodes of the ends."""
    n = points.shape[0]
    m = 2 * half + 1
    P = points[np.arange(-half, n + half) % n] if closed else points
    S = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
    k = n if closed else n - 2 * half
    s = np.stack([S[j: j + k] for j in range(m)], axis=1)
    w1, w2 = _lagrange_weights(s, half)
    x1 = np.full(points.shape, np.nan)
    x2 = np.full(points.shape, np.nan)
    rows = slice(0, n) if closed else slice(half, n - half)
    x1[rows] = sum(w1[:, [j]] * P[j: j + k] for j in range(m))
    x2[rows] = sum(w2[:, [j]] * P[j: j + k] for j in range(m))
    return x1, x2


def _graph_jets(points: np.ndarray, closed: bool, half: int = 3):
    """Unit tangent and curvature of a planar curve from local graphs.

    Each stencil of ``2 half + 1`` nodes is written as a graph ``y = f(x)``
    over the chord through its outer nodes and fitted by the interpolating
    polynomial.  Nothing depends on how the nodes are spaced along the
    curve, unlike a fit in chord-length parameter.
    """
    n = points.shape[0]
    offs = np.arange(-half, half + 1)
    centre = np.arange(n) if closed else np.arange(half, n - half)
    idx = (centre[:, None] + offs[None, :]) % n
    Q = points[idx] - points[centre][:, None, :]
    e = Q[:, -1] - Q[:, 0]
    e /= np.linalg.norm(e, axis=1)[:, None]
    x = Q[:, :, 0] * e[:, None, 0] + Q[:, :, 1] * e[:, None, 1]
    y = Q[:, :, 1] * e[:, None, 0] - Q[:, :, 0] * e[:, None, 1]
    scale = np.abs(x).max(axis=1, keepdims=True)
    V = (x / scale)[:, :, None] ** np.arange(2 * half + 1)[None, None, :]
    C = np.linalg.solve(V, y[:, :, None])[:, :, 0]
    f1 = C[:, 1] / scale[:, 0]
    f2 = 2.0 * C[:, 2] / scale[:, 0] ** 2
    w = np.sqrt(1.0 + f1 * f1)
    T = np.full(points.shape, np.nan)
    kappa = np.full(n, np.nan)
    T[centre] = (e + f1[:, None] * np.column_stack([-e[:, 1], e[:, 0]])) / w[:, None]
    kappa[centre] = f2 / w ** 3
    return T, kappa


def sigma_values(points: np.ndarray, closed: bool) -> np.ndarray:
    """``sigma = kappa - <X, X_s>`` at the nodes.

    ``sigma`` vanishes on the soliton while ``kappa`` and ``<X, X_s>`` are
    individually O(1), so both come from the same high-order local graph
    fit.  Across curvature jumps (the rounded corners of the initial data)
    the fit overshoots; use the exact values there.
    """
    T, kappa = _graph_jets(points, closed)
    return kappa - np.einsum("ij,ij->i", points, T)


def count_sign_changes(values: np.ndarray, cyclic: bool, tol: float = 0.0) -> int:
    """Sign changes of ``values`` ignoring entries with ``|value| <= tol``."""
    v = values[np.abs(values) > tol]
    if v.size < 2:
        return 0
    s = np.sign(v)
    n = int(np.count_nonzero(s[1:] != s[:-1]))
    if cyclic and s[0] != s[-1]:
        n += 1
    return n


def inflection_count(points: np.ndarray, closed: bool, tol: float = 1e-9) -> int:
    """Sign changes of the discrete curvature (``|kappa| <= tol`` skipped)."""
    k = discrete_curvature(points, closed)
    if not closed:
        k = k[1:-1]
    return count_sign_changes(k, closed, tol)


def passes_through_origin(points: np.ndarray, rel_tol: float = 1e-3) -> bool:
    r = np.hypot(points[:, 0], points[:, 1])
    return bool(r.min() <= rel_tol * max(np.median(segment_lengths(points, True)), 1e-12))


@dataclass(frozen=True)
class LiftedPath:
    """Closed curve through the origin as a path from the origin back to it,
    with the polar angle lifted continuously along the path."""

    index: np.ndarray
    theta: np.ndarray
    radius: np.ndarray


def lifted_path(points: np.ndarray, t: float) -> LiftedPath:
    """Split at the node closest to the origin and lift the polar angle.

    The ``2 pi`` ambiguity is fixed so the largest lifted angle is the one
    closest to ``-t`` (the tip of the spiral).
    """
    n = points.shape[0]
    r = np.hypot(points[:, 0], points[:, 1])
    i0 = int(np.argmin(r))
    idx = (i0 + 1 + np.arange(n - 1)) % n
    th = np.unwrap(np.arctan2(points[idx, 1], points[idx, 0]))
    top = th.max()
    k = np.round((-t - top) / (2 * np.pi))
    return LiftedPath(idx, th + 2 * np.pi * k, r[idx])


def ray_count(points: np.ndarray, theta0: float, closed: bool = True, t: Optional[float] = None,
              tol: float = 1e-8) -> Tuple[int, bool]:
    """Intersections with the ray at polar angle ``theta0``.

    For curves through the origin (with ``t`` given) the angle is lifted
    along the spiral and the return through the origin counts as one
    crossing; otherwise the half-line ``{r E1(theta0), r > 0}`` is used.
    Returns ``(count, tangency)`` where tangency flags a node within
    ``tol`` of the ray.
    """
    if t is not None and closed and passes_through_origin(points):
        lp = lifted_path(points, t)
        g = lp.theta - theta0
        tangent = bool(np.any(np.abs(g) <= tol))
        return count_sign_changes(g, True, tol), tangent
    d = unit_vector(theta0)
    c = points[:, 0] * d[1] - points[:, 1] * d[0]
    a = points @ d
    nxt = np.roll(np.arange(points.shape[0]), -1) if closed else np.arange(1, points.shape[0])
    cur = np.arange(points.shape[0]) if closed else np.arange(points.shape[0] - 1)
    # nodes exactly on the line count as lying on its positive side
    side = np.where(c >= 0, 1.0, -1.0)
    cross = side[cur] != side[nxt]
    w = c[cur] / np.where(cross, c[cur] - c[nxt], 1.0)
    at = a[cur] + w * (a[nxt] - a[cur])
    tangent = bool(np.any((np.abs(c) <= tol) & (a > 0)))
    return int(np.count_nonzero(cross & (at > 0))), tangent


def leaf_coordinate(points: np.ndarray, t: float, soliton: Optional[SolitonTable] = None) -> LiftedPath:
    """Lifted path plus the leaf label ``y = alpha(r) - theta + t`` where
    ``R(alpha) = r``; returned in the ``theta`` field."""
    table = soliton or default_table()
    lp = lifted_path(points, t)
    alpha = table.theta_of_R(lp.radius)
    return LiftedPath(lp.index, alpha - lp.theta + t, lp.radius)


def leaf_count(points: np.ndarray, y: float, t: float, soliton: Optional[SolitonTable] = None,
               tol: float = 1e-8) -> Tuple[int, bool]:
    """Intersections with the leaf ``R(theta - t + y) E1(theta)``; the
    return through the origin counts as one."""
    lc = leaf_coordinate(points, t, soliton)
    g = lc.theta - y
    return count_sign_changes(g, True, tol), bool(np.any(np.abs(g) <= tol))


def polar_graphs(points: np.ndarray, t: float, n_theta: int = 400):
    """``(theta, R_minus, R_plus)`` on a grid inside the common angle range
    of the two branches of a curve through the origin."""
    lp = lifted_path(points, t)
    k = int(np.argmax(lp.theta))
    out_th, out_r = lp.theta[: k + 1], lp.radius[: k + 1]
    in_th, in_r = lp.theta[k:][::-1], lp.radius[k:][::-1]
    if np.any(np.diff(out_th) <= 0) or np.any(np.diff(in_th) <= 0):
        return None
    lo = max(out_th[0], in_th[0])
    hi = min(out_th[-1], in_th[-1])
    grid = np.linspace(lo, hi, n_theta)
    r1 = np.interp(grid, out_th, out_r)
    r2 = np.interp(grid, in_th, in_r)
    return grid, np.minimum(r1, r2), np.maximum(r1, r2)


@dataclass(frozen=True)
class DiagnosticsFrame:
    """Monitors of one snapshot."""

    t: float
    length: float
    area: float
    kappa_energy: float
    max_abs_kappa: float
    min_sigma: float
    ray_intersections: Dict[float, int]
    leaf_intersections: Dict[float, int]
    tangencies: bool
    inflection_count: int
    tip_angle: float
    polar_graphs: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None

    def row(self) -> dict:
        out = {"t": self.t, "length": self.length, "area": self.area, "kappa_energy": self.kappa_energy,
               "max_abs_kappa": self.max_abs_kappa, "min_sigma": self.min_sigma,
               "inflections": self.inflection_count, "tip_angle": self.tip_angle,
               "tangency": int(self.tangencies)}
        for k, v in self.ray_intersections.items():
            out[f"ray[{k:g}]"] = v
        for k, v in self.leaf_intersections.items():
            out[f"leaf[{k:g}]"] = v
        return out


def diagnostics(state: FlowState, rays: Sequence[float] = (), leaves: Sequence[float] = (),
                soliton: Optional[SolitonTable] = None, graphs: bool = False) -> DiagnosticsFrame:
    """Monitors of a closed planar curve.

    Rays are lifted polar angles for curves through the origin (the spiral
    experiments) and plain half-lines otherwise; leaf counts need a curve
    through the origin.
    """
    P = state.points
    closed = state.closed
    through = closed and passes_through_origin(P)
    kap = discrete_curvature(P, closed)
    sig = state.exact_sigma if state.exact_sigma is not None else sigma_values(P, closed)
    rc, tang = {}, False
    for th in rays:
        c, tg = ray_count(P, th, closed, state.t if through else None)
        rc[float(th)] = c
        tang |= tg
    lc = {}
    for y in leaves:
        if not through:
            raise OutOfRange("leaf counts need a curve through the origin")
        c, tg = leaf_count(P, y, state.t, soliton)
        lc[float(y)] = c
        tang |= tg
    if through:
        tip = float(lifted_path(P, state.t).theta.max())
    else:
        tip = float(np.max(np.arctan2(P[:, 1], P[:, 0])))
    pg = None
    if graphs and through and all(v <= 2 for v in rc.values()):
        pg = polar_graphs(P, state.t)
    return DiagnosticsFrame(
        t=state.t, length=float(segment_lengths(P, closed).sum()),
        area=enclosed_area(SampledCurve(P, closed=True)) if closed else float("nan"),
        kappa_energy=curvature_energy(P, closed), max_abs_kappa=float(np.nanmax(np.abs(kap))),
        min_sigma=float(np.nanmin(sig)), ray_intersections=rc, leaf_intersections=lc,
        tangencies=tang, inflection_count=inflection_count(P, closed), tip_angle=tip,
        polar_graphs=pg)


# ---------------------------------------------------------------------------
# square-profile initial data


@dataclass(frozen=True)
class SquareProfileSpec:
    """Two soliton arms cut at the ray ``theta = -t0``, joined by the radial
    segment on that ray, with both corners rounded at radius ``rho``.

    ``window`` (tip-frame angle span, optional) keeps only the part with lab
    angle at least ``-t0 - window`` as an open curve.
    """

    t0: float
    rounding_radius: float = 1e-2
    h_max: float = 0.5
    c_kappa: float = 0.1
    gradation: float = 0.05
    window: Optional[float] = None
    h_origin: Optional[float] = 0.03
    r_origin: float = 4.5

    def mesh(self) -> MeshSpec:
        return MeshSpec(self.h_max, self.c_kappa, self.gradation, h_origin=self.h_origin,
                        r_origin=self.r_origin)


def _fillet(table: SolitonTable, t0: float, sign: int, rho: float):
    """Circle of radius ``rho`` tangent to the ray ``theta = -t0`` (on its
    ``theta < -t0`` side) and to the arm ``y = sign pi/2``.

    Returns centre, tangent point on the ray and the lab angle of the
    tangent point on the arm.
    """
    th_c = -t0
    d = unit_vector(th_c)
    n_in = -np.array([-d[1], d[0]])  # side of smaller polar angle
    y = sign * HALF_PI

    def arm(th):
        return table.R(np.atleast_1d(th - t0 + y))[0] * unit_vector(th)

    def dist(s):
        c = s * d + rho * n_in
        # closest arm point by Newton on the polar angle
        th = th_c - rho / max(s, 1e-9)
        for _ in range(50):
            e = 1e-7
            f = lambda a: np.dot(arm(a) - c, arm(a) - c)
            g = (f(th + e) - f(th - e)) / (2 * e)
            hh = (f(th + e) - 2 * f(th) + f(th - e)) / e ** 2
            step = g / hh
            th -= step
            if abs(step) < 1e-14:
                break
        return np.linalg.norm(arm(th) - c), th, c

    r_arm = float(table.R(np.atleast_1d(th_c - t0 + y))[0])
    # outer corner: centre inside (radius below the arm); inner: above
    s = r_arm - sign * rho
    for _ in range(60):
        dd, th, c = dist(s)
        f = dd - rho
        e = 1e-9
        fp = (dist(s + e)[0] - dist(s - e)[0]) / (2 * e)
        step = f / fp
        s -= step
        if abs(step) < 1e-14:
            break
    dd, th, c = dist(s)
    return c, s * d, th


def _arc(center, p_from, p_to, ccw: bool, n: int):
    a0 = np.arctan2(*(p_from - center)[::-1])
    a1 = np.arctan2(*(p_to - center)[::-1])
    da = np.angle(np.exp(1j * (a1 - a0)))
    if ccw and da < 0:
        da += 2 * np.pi
    if not ccw and da > 0:
        da -= 2 * np.pi
    rho = np.linalg.norm(p_from - center)
    ang = a0 + da * np.linspace(0.0, 1.0, n + 1)
    return center + rho * np.column_stack([np.cos(ang), np.sin(ang)])


def square_profile_points(spec: SquareProfileSpec, soliton: Optional[SolitonTable] = None):
    """Nodes of the rounded square profile (lab frame) and the exact
    ``sigma`` at each node (zero on the arms, ``1/rho - <X, T>`` on the
    corner arcs, ``-<X, T>`` on the segment)."""
    from .assembly import Piece, arm_piece, sample_pieces

    table = soliton or default_table()
    t0, rho = spec.t0, spec.rounding_radius
    c_out, q_out, th_out = _fillet(table, t0, +1, rho)
    c_in, q_in, th_in = _fillet(table, t0, -1, rho)
    a_out = th_out - t0 + HALF_PI
    a_in = th_in - t0 - HALF_PI
    p_out = table.R(np.atleast_1d(a_out))[0] * unit_vector(th_out)
    p_in = table.R(np.atleast_1d(a_in))[0] * unit_vector(th_in)
    if spec.window is None:
        lo_out = lo_in = HALF_PI
    else:
        th_w = -t0 - spec.window
        lo_out, lo_in = th_w - t0 + HALF_PI, th_w - t0 - HALF_PI
        if lo_in < HALF_PI:
            raise OutOfRange("window reaches the origin")
    ds = min(0.1, spec.h_max / 4)
    n_arc = max(int(np.ceil(0.5 * np.pi * rho / min(ds, rho * 0.05))), 16)

    def fixed(pts):
        return lambda q: pts[np.round(q).astype(int)]

    arc1 = _arc(c_out, p_out, q_out, True, n_arc)
    arc2 = _arc(c_in, q_in, p_in, True, n_arc)
    seg_len = np.linalg.norm(q_in - q_out)
    n_seg = max(int(np.ceil(seg_len / min(ds, 0.01))), 8)
    seg = q_out + np.linspace(0.0, 1.0, n_seg + 1)[:, None] * (q_in - q_out)

    def linear(pts):
        def ev(q):
            q = np.asarray(q, dtype=float)
            i = np.clip(np.floor(q).astype(int), 0, len(pts) - 2)
            w = (q - i)[:, None]
            return (1 - w) * pts[i] + w * pts[i + 1]
        return ev

    def circle(center, pts):
        rr = np.linalg.norm(pts[0] - center)
        ang = np.unwrap(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))

        def ev(q):
            a = np.interp(q, np.arange(len(ang)), ang)
            return center + rr * np.column_stack([np.cos(a), np.sin(a)])
        return ev

    pieces = [
        arm_piece(+1, t0, lo_out, a_out, table, ds, "arm+"),
        Piece("fillet+", circle(c_out, arc1), np.arange(arc1.shape[0], dtype=float)),
        Piece("segment", linear(seg), np.arange(seg.shape[0], dtype=float)),
        Piece("fillet-", circle(c_in, arc2), np.arange(arc2.shape[0], dtype=float)),
        arm_piece(-1, t0, lo_in, a_in, table, ds, "arm-", reverse=True),
    ]
    closed = spec.window is None
    if closed:
        pc = pieces[-1]
        pieces[-1] = Piece(pc.tag, pc.evaluate, pc.q_fine[:-1])
    pts, tags = sample_pieces(pieces, closed, spec.h_max, spec.c_kappa, spec.gradation,
                              h_origin=spec.h_origin, r_origin=spec.r_origin)
    sigma = np.zeros(pts.shape[0])
    for tag, _, _, a, b in tags:
        X = pts[a:b]
        if tag.startswith("fillet"):
            c = c_out if tag == "fillet+" else c_in
            T = (X - c) / rho
            T = np.column_stack([-T[:, 1], T[:, 0]])
            sigma[a:b] = 1.0 / rho - np.einsum("ij,ij->i", X, T)
        elif tag == "segment":
            T = (q_in - q_out) / seg_len
            sigma[a:b] = -(X @ T)
    return pts, sigma


def window_boundary(window: float, soliton: Optional[SolitonTable] = None) -> Boundary:
    """Ends of a windowed spiral: the exact soliton points on the ray at lab
    angle ``-t - window``, which is fixed in the tip frame."""
    table = soliton or default_table()
    phi = -float(window)

    def ends(t):
        th = phi - t
        a = table.R(np.array([th - t + HALF_PI]))[0] * unit_vector(th)
        b = table.R(np.array([th - t - HALF_PI]))[0] * unit_vector(th)
        return a, b

    return ends


SIGMA_TOL = 1e-6


def build_square_profile(spec: SquareProfileSpec, soliton: Optional[SolitonTable] = None,
                         frame_rate: float = 1.0, order: int = 3) -> FlowState:
    """Square-profile initial data at ``t0``, set up for third-order steps
    (``sigma`` vanishes on the arms, so its sign is sensitive to time
    stepping error near the origin, where the arms turn fastest).

    Raises
    ------
    SigmaViolation
        If ``min sigma < -SIGMA_TOL`` (the rounding radius is too large).
    """
    if spec.t0 > -25:
        raise OutOfRange("t0 must be <= -25")
    table = soliton or default_table()
    pts, sig = square_profile_points(spec, table)
    closed = spec.window is None
    if np.nanmin(sig) < -SIGMA_TOL:
        raise SigmaViolation(f"min sigma = {np.nanmin(sig):.3g}; decrease the rounding radius")
    bnd = None if closed else window_boundary(spec.window, table)
    state = FlowState(t=float(spec.t0), points=pts, closed=closed, boundary=bnd,
                      frame_rate=frame_rate, mesh=spec.mesh(), exact_sigma=sig, order=order)
    return state


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentResult:
    frames: List[DiagnosticsFrame]
    snapshots: List[Tuple[float, np.ndarray]]
    energy_integral: float
    final: FlowState
    violations: List[str] = field(default_factory=list)

    @property
    def length_drop(self) -> float:
        return self.frames[0].length - self.frames[-1].length


def default_dt(points: np.ndarray, frame_rate: float) -> float:
    """Step limited by the explicit frame term: ``0.5 / max |X|^2``."""
    rmax = float(np.max(np.hypot(points[:, 0], points[:, 1])))
    return 0.5 / max(rmax, 1.0) ** 2 if frame_rate else 1e-3


def run_experiment(spec: SquareProfileSpec, t_end: float, rays: Sequence[float] = (),
                   leaves: Sequence[float] = (), record_every: float = 0.5, dt: Optional[float] = None,
                   remesh_every: int = 50, snapshot_every: Optional[float] = None,
                   soliton: Optional[SolitonTable] = None, frame_rate: float = 1.0) -> ExperimentResult:
    """Flow a closed square profile from ``spec.t0`` to ``t_end`` and record
    monitors every ``record_every`` time units.

    ``energy_integral`` is ``int int kappa^2 ds dt`` accumulated by the
    trapezoid rule over every step.  ``violations`` lists monitor checks
    that failed (sigma below tolerance, increasing counts, non-decreasing
    length).
    """
    if not spec.t0 < t_end <= -25:
        raise OutOfRange("need t0 < t_end <= -25")
    table = soliton or default_table()
    state = build_square_profile(spec, table, frame_rate)
    dt = dt or default_dt(state.points, state.frame_rate)
    frames = [diagnostics(state, rays, leaves, table)]
    snaps = [(state.t, state.points.copy())]
    acc = {"E": 0.0, "prev": curvature_energy(state.points, True), "t": state.t}
    next_rec = [state.t + record_every]
    next_snap = [state.t + (snapshot_every or np.inf)]

    def cb(s: FlowState):
        e = curvature_energy(s.points, True)
        acc["E"] += 0.5 * (e + acc["prev"]) * (s.t - acc["t"])
        acc["prev"], acc["t"] = e, s.t
        if s.t >= next_rec[0] - 1e-9 or abs(s.t - t_end) < 1e-12:
            frames.append(diagnostics(s, rays, leaves, table))
            next_rec[0] += record_every
        if s.t >= next_snap[0] - 1e-9:
            snaps.append((s.t, s.points.copy()))
            next_snap[0] += snapshot_every

    state = evolve(state, t_end, dt, remesh_every, cb)
    if abs(frames[-1].t - state.t) > 1e-12:
        frames.append(diagnostics(state, rays, leaves, table))
    if snapshot_every:
        snaps.append((state.t, state.points.copy()))
    return ExperimentResult(frames, snaps, acc["E"], state, monitor_violations(frames))


def monitor_violations(frames: Sequence[DiagnosticsFrame], sigma_tol: float = SIGMA_TOL) -> List[str]:
    out = []
    for f in frames:
        if f.min_sigma < -sigma_tol:
            out.append(f"min sigma {f.min_sigma:.3g} at t = {f.t:.6g}")
    for a, b in zip(frames[:-1], frames[1:]):
        for k in a.ray_intersections:
            if b.ray_intersections[k] > a.ray_intersections[k]:
                out.append(f"ray {k:g} count rose at t = {b.t:.6g}")
        for k in a.leaf_intersections:
            if b.leaf_intersections[k] > a.leaf_intersections[k]:
                out.append(f"leaf {k:g} count rose at t = {b.t:.6g}")
        if b.inflection_count > a.inflection_count:
            out.append(f"inflections rose at t = {b.t:.6g}")
        if not b.length < a.length:
            out.append(f"length did not decrease at t = {b.t:.6g}")
    return out
