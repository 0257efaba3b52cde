"""Homotopies between curves and their length under curve shortening.

A homotopy is stored as a sheet: curves ``X(eps_i, .)`` with matched node
counts on an increasing grid ``eps_0 < ... < eps_m``.  Its length

    l(X) = int int |X_eps| ds deps

bounds the area swept between the end curves and does not increase when
every slice moves by curve shortening.  Lengths use the midpoint rule in
``eps`` (``X_eps`` as the difference quotient of neighbouring slices, ``ds``
on the averaged curve) and the trapezoid rule along the curve.

The kernel works in any ambient dimension; the area comparisons are planar.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .assembly import HALF_PI, AssembledCurve, build_approximate_solution
from .core import SampledCurve, unit_vector
from .deficit import deficit_report, parametric_deficit
from .errors import BoundViolation, MismatchedGrids, NonConvergence, OutOfRange
from .flow import (FlowState, MeshSpec, _max_curvature, _spline, evolve,
                   resample_uniform, step_parametric, window_boundary)
from .soliton import SolitonTable, default_table


# ---------------------------------------------------------------------------
# sheets


@dataclass
class HomotopyHistory:
    """``l(t)`` and the per-interval integrals ``int |X_eps| ds`` (shape
    ``(steps + 1, m)``) recorded while a sheet evolves."""

    times: np.ndarray
    lengths: np.ndarray
    slice_integrals: np.ndarray
    renormalized: np.ndarray

    def to_rows(self) -> List[dict]:
        return [{"t": float(t), "length": float(l), "renormalized": int(r)}
                for t, l, r in zip(self.times, self.lengths, self.renormalized)]


@dataclass
class HomotopySheet:
    """Curves on an ``eps`` grid with a common node count.

    Attributes
    ----------
    eps_grid : (m + 1,) array
        Strictly increasing.
    curves : (m + 1, n, d) array
    closed : bool
    history : HomotopyHistory, optional
        Filled in by :func:`evolve_homotopy`.
    """

    eps_grid: np.ndarray
    curves: np.ndarray
    closed: bool = True
    history: Optional[HomotopyHistory] = None

    def __post_init__(self):
        self.eps_grid = np.asarray(self.eps_grid, dtype=float)
        curves = self.curves
        if not isinstance(curves, np.ndarray):
            curves = [c.points if isinstance(c, SampledCurve) else np.asarray(c, float) for c in curves]
            if len({c.shape for c in curves}) != 1:
                raise MismatchedGrids("slices need matched node counts")
        self.curves = np.asarray(curves, dtype=float)
        if self.curves.ndim != 3 or self.curves.shape[0] != self.eps_grid.size:
            raise MismatchedGrids("one curve per eps value is needed")
        if self.eps_grid.size < 2 or np.any(np.diff(self.eps_grid) <= 0):
            raise OutOfRange("eps grid must be strictly increasing with at least two values")

    @property
    def n_slices(self) -> int:
        return self.curves.shape[0]

    @property
    def dim(self) -> int:
        return self.curves.shape[2]

    @property
    def normality_residual(self) -> float:
        """``max |<X_eps, T>| / |X_eps|`` over nodes and eps intervals, with
        ``T`` the tangent of the averaged curve."""
        return float(np.max(_normality(self.curves, self.closed), initial=0.0))

    def slice(self, i: int) -> SampledCurve:
        return SampledCurve(self.curves[i], closed=self.closed)

    def to_json(self) -> dict:
        return {"eps_grid": self.eps_grid.tolist(), "closed": self.closed,
                "curves": [c.tolist() for c in self.curves]}

    @classmethod
    def from_json(cls, data: dict) -> "HomotopySheet":
        return cls(np.array(data["eps_grid"]), np.array(data["curves"]), bool(data.get("closed", True)))


def _diff(P: np.ndarray, closed: bool) -> np.ndarray:
    return np.diff(P, axis=-2, append=P[..., :1, :]) if closed else np.diff(P, axis=-2)


def _segments(P: np.ndarray, closed: bool) -> np.ndarray:
    return np.linalg.norm(_diff(P, closed), axis=-1)


def _trapezoid_along(f: np.ndarray, seg: np.ndarray, closed: bool) -> np.ndarray:
    """``int f ds`` with nodal ``f`` and segment lengths ``seg`` (last axis)."""
    nxt = np.roll(f, -1, axis=-1) if closed else f[..., 1:]
    cur = f if closed else f[..., :-1]
    return np.sum(0.5 * (cur + nxt) * seg, axis=-1)


def slice_integrals(sheet: HomotopySheet) -> np.ndarray:
    """``int |X_eps| ds`` on each eps interval, evaluated at its midpoint."""
    C = sheet.curves
    de = np.diff(sheet.eps_grid)
    Xe = (C[1:] - C[:-1]) / de[:, None, None]
    mid = 0.5 * (C[1:] + C[:-1])
    speed = np.linalg.norm(Xe, axis=-1)
    return _trapezoid_along(speed, _segments(mid, sheet.closed), sheet.closed)


def homotopy_length(sheet: HomotopySheet) -> float:
    """``l = int int |X_eps| ds deps`` (midpoint in eps, trapezoid in s)."""
    return float(np.sum(slice_integrals(sheet) * np.diff(sheet.eps_grid)))


def _spline_tangents(P: np.ndarray, closed: bool) -> np.ndarray:
    spl, s = _spline(P, closed)
    d = spl(s[:-1] if closed else s, 1)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _noise_floor(P: np.ndarray) -> float:
    """Distances below this are roundoff in the coordinates of ``P``."""
    return 1e-12 * max(float(np.max(np.abs(P))), 1.0)


def _normality(C: np.ndarray, closed: bool) -> np.ndarray:
    d = C[1:] - C[:-1]
    Tm = np.stack([_spline_tangents(0.5 * (a + b), closed) for a, b in zip(C[:-1], C[1:])])
    nd = np.linalg.norm(d, axis=-1)
    scale = np.max(nd, initial=0.0)
    res = np.abs(np.einsum("ijk,ijk->ij", d, Tm)) / np.where(nd > 0, nd, 1.0)
    # nodes that do not move between slices (up to roundoff) are trivially normal
    res[nd <= max(1e-12 * scale, _noise_floor(C))] = 0.0
    if not closed:
        res[:, [0, -1]] = 0.0
    return res


# ---------------------------------------------------------------------------
# normalization


def _slide(anchor: np.ndarray, target: np.ndarray, closed: bool, tol: float,
           max_sweeps: int) -> np.ndarray:
    """Move the nodes of ``target`` along that curve until each difference
    to the matching ``anchor`` node is orthogonal to the averaged curve."""
    spl, s = _spline(target, closed)
    period = s[-1]
    floor = _noise_floor(target)
    q = s[:-1].copy() if closed else s.copy()
    for sweep in range(max_sweeps):
        qq = q % period if closed else q
        P = spl(qq)
        Tm = _spline_tangents(0.5 * (anchor + P), closed)
        d = P - anchor
        g = np.einsum("ij,ij->i", d, Tm)
        nd = np.linalg.norm(d, axis=1)
        res = np.abs(g) / np.where(nd > 0, nd, 1.0)
        # offsets at the roundoff level of the coordinates count as converged
        res[(nd <= max(1e-12 * float(nd.max()), floor)) | (np.abs(g) <= 1e-3 * floor)] = 0.0
        if not closed:
            g[[0, -1]] = 0.0
            res[[0, -1]] = 0.0
        if np.max(res) <= tol:
            return P
        q = q - g / np.einsum("ij,ij->i", spl(qq, 1), Tm)
        if not closed:
            q[0], q[-1] = s[0], s[-1]
        gaps = np.diff(np.append(q, q[0] + period)) if closed else np.diff(q)
        if np.any(gaps <= 0):
            raise NonConvergence("normal projection folded the node order")
    raise NonConvergence(f"normal projection did not converge in {max_sweeps} sweeps")


def normalize_homotopy(sheet: HomotopySheet, tol: float = 1e-12, max_sweeps: int = 50,
                       uniform_first: bool = False) -> HomotopySheet:
    """Reparametrize the slices so that ``X_eps`` is normal to each curve.

    The first slice is kept (or redistributed uniformly in arclength with
    ``uniform_first``); each following slice has its nodes slid along it,
    by repeated projection, until every difference to the previous slice is
    orthogonal to the curve midway between them.  The curves as sets are unchanged.

    Raises
    ------
    NonConvergence
        If a slice needs more than ``max_sweeps`` projection sweeps.
    """
    C = sheet.curves.copy()
    closed = sheet.closed
    if uniform_first:
        C[0] = resample_uniform(C[0], closed, C.shape[1])
    for i in range(1, C.shape[0]):
        C[i] = _slide(C[i - 1], C[i], closed, tol, max_sweeps)
    return replace(sheet, curves=C)


# ---------------------------------------------------------------------------
# evolution


def evolve_homotopy(sheet: HomotopySheet, t0: float, t1: float, dt: float = 1e-3,
                    renormalize_every: int = 20, order: int = 2, c_dt: float = 0.5,
                    boundary: Optional[Callable] = None) -> HomotopySheet:
    """Flow every slice by curve shortening from ``t0`` to ``t1``.

    All slices take the same steps (limited by ``c_dt / max kappa^2`` over
    the sheet).  Nodes move normally; every ``renormalize_every`` steps the
    sheet is normalized again.  Open slices need ``boundary(t)`` giving a
    ``(start, end)`` pair shared by all slices, or keep their ends.  The
    returned sheet carries the ``l(t)`` record in ``history``.
    """
    if t1 < t0:
        raise OutOfRange("t1 must not precede t0")
    closed = sheet.closed
    states = [FlowState(t=float(t0), points=c.copy(), closed=closed, boundary=boundary, order=order)
              for c in sheet.curves]
    cur = sheet
    times, lengths, per, flags = [float(t0)], [homotopy_length(cur)], [slice_integrals(cur)], [0]
    t, steps = float(t0), 0
    while t1 - t > 1e-12 * max(1.0, abs(t1)):
        kmax = max(_max_curvature(s.points, closed)[1] for s in states)
        h = min(dt, c_dt / max(kmax, 1e-300) ** 2, t1 - t)
        states = [step_parametric(s, h) for s in states]
        t = states[0].t
        steps += 1
        cur = replace(cur, curves=np.stack([s.points for s in states]))
        renorm = renormalize_every and steps % renormalize_every == 0
        if renorm:
            cur = normalize_homotopy(cur)
            states = [replace(s, points=c.copy()) for s, c in zip(states, cur.curves)]
        times.append(t)
        lengths.append(homotopy_length(cur))
        per.append(slice_integrals(cur))
        flags.append(int(bool(renorm)))
    hist = HomotopyHistory(np.array(times), np.array(lengths), np.array(per), np.array(flags))
    return replace(cur, history=hist)


def contraction_violations(history: HomotopyHistory, rel_tol: float = 1e-3) -> List[str]:
    """Steps where ``l`` or a per-slice integral grew by more than ``rel_tol``
    (relative to the sheet length)."""
    out = []
    L = history.lengths
    scale = max(float(L[0]), 1e-300)
    for k in range(1, L.size):
        if L[k] > L[k - 1] + rel_tol * scale:
            out.append(f"length rose by {(L[k] - L[k - 1]) / scale:.3g} at t = {history.times[k]:.6g}")
        grow = history.slice_integrals[k] - history.slice_integrals[k - 1]
        ref = np.maximum(history.slice_integrals[k - 1], rel_tol * scale)
        bad = np.nonzero(grow > rel_tol * ref)[0]
        if bad.size:
            out.append(f"slice {int(bad[0])} integral rose at t = {history.times[k]:.6g}")
    return out


def triangle_defect(sheet: HomotopySheet) -> np.ndarray:
    """``(|X_eps|_s)^2 - |X_eps_s|^2 + <X_ss, X_eps>^2`` at every node of
    every eps interval.  It vanishes when ``X_eps`` is normal to the curves,
    so it measures how far a sheet is from normalized.

    Derivatives along the curve are taken from quintic splines through the
    averaged curve and through ``X_eps``.
    """
    C = sheet.curves
    de = np.diff(sheet.eps_grid)
    out = []
    for i in range(C.shape[0] - 1):
        X = 0.5 * (C[i] + C[i + 1])
        E = (C[i + 1] - C[i]) / de[i]
        spl, s = _spline(X, sheet.closed)
        q = s[:-1] if sheet.closed else s
        E_loop = np.vstack([E, E[:1]]) if sheet.closed else E
        espl = _spline_on(s, E_loop, sheet.closed)
        Xp, Xpp = spl(q, 1), spl(q, 2)
        Ep = espl(q, 1)
        sp = np.linalg.norm(Xp, axis=1)
        T = Xp / sp[:, None]
        Xss = (Xpp - np.einsum("ij,ij->i", Xpp, T)[:, None] * T) / sp[:, None] ** 2
        Es = Ep / sp[:, None]
        nE = np.linalg.norm(E, axis=1)
        nE_s = np.einsum("ij,ij->i", E, Es) / np.where(nE > 0, nE, 1.0)
        d = nE_s ** 2 - np.einsum("ij,ij->i", Es, Es) + np.einsum("ij,ij->i", Xss, E) ** 2
        if not sheet.closed:
            d[[0, -1]] = -np.inf
        out.append(d)
    return np.array(out)


def _spline_on(s: np.ndarray, values: np.ndarray, closed: bool):
    from scipy.interpolate import make_interp_spline

    return make_interp_spline(s, values, k=5, bc_type="periodic" if closed else None, axis=0)


# ---------------------------------------------------------------------------
# planar sheets


def radial_sheet(inner: np.ndarray, outer: np.ndarray, n_slices: int = 33) -> HomotopySheet:
    """Linear interpolation ``(1 - eps) inner + eps outer`` on ``[0, 1]``."""
    eps = np.linspace(0.0, 1.0, n_slices)
    C = (1.0 - eps)[:, None, None] * inner[None] + eps[:, None, None] * outer[None]
    return HomotopySheet(eps, C, True)


def star_sheet(r_inner: Callable, r_outer: Callable, n_nodes: int = 400,
               n_slices: int = 33) -> HomotopySheet:
    """Star-shaped slices ``r = (1 - eps) r_inner + eps r_outer`` on a common
    angle grid."""
    th = np.arange(n_nodes) * (2 * np.pi / n_nodes)
    eps = np.linspace(0.0, 1.0, n_slices)
    E = unit_vector(th)
    r = (1.0 - eps)[:, None] * r_inner(th)[None] + eps[:, None] * r_outer(th)[None]
    return HomotopySheet(eps, r[:, :, None] * E[None], True)


def random_star_sheet(rng: np.random.Generator, n_modes: int = 4, amplitude: float = 0.08,
                      n_nodes: int = 400, n_slices: int = 33) -> HomotopySheet:
    """Nested star-shaped end curves with random low Fourier modes."""
    def profile(base):
        a = rng.normal(size=n_modes) * amplitude / np.arange(1, n_modes + 1)
        b = rng.normal(size=n_modes) * amplitude / np.arange(1, n_modes + 1)
        ph = rng.uniform(0, 2 * np.pi)

        def r(th):
            k = np.arange(2, n_modes + 2)[:, None]
            return base * (1.0 + a @ np.cos(k * (th[None] + ph)) + b @ np.sin(k * (th[None] + ph)))
        return r

    return star_sheet(profile(1.0), profile(2.0), n_nodes, n_slices)


def swept_bound(sheet: HomotopySheet) -> float:
    """Symmetric difference area of the regions bounded by the end curves
    (a lower bound for ``l``)."""
    from .core import symmetric_difference_area

    if sheet.dim != 2 or not sheet.closed:
        raise OutOfRange("needs closed planar slices")
    return symmetric_difference_area(sheet.curves[0], sheet.curves[-1])


# ---------------------------------------------------------------------------
# windowed spiral curves and area comparisons


def lifted_window_angles(points: np.ndarray, theta_start: float) -> np.ndarray:
    """Polar angle lifted continuously along an open curve, starting at the
    branch of ``theta_start`` for the first node."""
    th = np.unwrap(np.arctan2(points[:, 1], points[:, 0]))
    th += 2 * np.pi * np.round((theta_start - th[0]) / (2 * np.pi))
    return th


def _densify(P: np.ndarray, h_target: np.ndarray) -> np.ndarray:
    """Insert spline points so that no segment is longer than its target."""
    if P.shape[0] < 6:
        return P
    spl, s = _spline(P, False)
    seg = np.diff(s)
    k = np.maximum(np.ceil(seg / np.minimum(h_target[:-1], h_target[1:])).astype(int), 1)
    q = np.concatenate([s[i] + seg[i] * np.arange(k[i]) / k[i] for i in range(seg.size)] + [s[-1:]])
    out = spl(q)
    out[0], out[-1] = P[0], P[-1]
    return out


def _dense_targets(P: np.ndarray, h_dense: float, c_dense: float) -> np.ndarray:
    from .flow import discrete_curvature

    k = np.abs(discrete_curvature(P, False))
    k[[0, -1]] = k[[1, -2]] if P.shape[0] > 2 else 0.0
    return np.minimum(h_dense, c_dense / np.maximum(np.nan_to_num(k), 1e-300))


@dataclass(frozen=True)
class WindowGeometry:
    """Lab angle of the window ray and of the cut between the arm part
    (compared node by node) and the tip part (densified)."""

    t: float
    theta_start: float
    theta_cut: float


def window_geometry(t: float, window: float, K: float = 10.0, soliton: Optional[SolitonTable] = None,
                    margin: float = 20.0) -> WindowGeometry:
    """The cut sits ``(2 K ln tau + margin) / R^2`` below the tip angle
    ``-t``, outside the transition bands of the approximate solution."""
    from .assembly import ZFrame

    fr = ZFrame(t, soliton or default_table())
    delta = (2 * K * np.log(fr.tq.tau) + margin) / fr.R ** 2
    if delta >= window:
        raise OutOfRange("window is too short to contain the tip region")
    return WindowGeometry(float(t), -t - window, -t - delta)


def conforming_symmetric_difference(points: np.ndarray, reference: np.ndarray, geom: WindowGeometry,
                                    soliton: Optional[SolitonTable] = None, h_dense: float = 0.01,
                                    c_dense: float = 0.05) -> float:
    """Area between two open window curves whose ends coincide on the window
    ray, both of which follow the exact soliton arms away from the tip.

    On the arms the reference is evaluated exactly at the polar angles of
    the nodes of ``points`` (so chord errors of the two polygons cancel);
    beyond ``geom.theta_cut`` both curves are densified along splines.
    The polygons are closed along the common window ray.
    """
    from .core import symmetric_difference_area

    table = soliton or default_table()
    t = geom.t

    def split(P):
        th = lifted_window_angles(P, geom.theta_start)
        tip = int(np.argmax(th))
        dense = th >= geom.theta_cut
        dense[tip] = True
        idx = np.nonzero(dense)[0]
        return th, idx[0], idx[-1]

    th, a, b = split(points)
    th_r, ar, br = split(reference)
    if not (np.all(np.diff(th[: a + 1]) > 0) and np.all(np.diff(th[b:]) < 0)):
        raise OutOfRange("arms are not polar graphs")

    def exact(theta, sign):
        return table.R(theta - t + sign * HALF_PI)[:, None] * unit_vector(theta)

    P_tip = points[a: b + 1]
    R_tip = reference[ar: br + 1]
    P_tip = _densify(P_tip, _dense_targets(P_tip, h_dense, c_dense))
    R_tip = _densify(R_tip, _dense_targets(R_tip, h_dense, c_dense))
    poly_p = np.vstack([points[:a], P_tip, points[b + 1:]])
    poly_r = np.vstack([exact(th[:a], +1), R_tip, exact(th[b + 1:], -1)])
    # keep the exact shared end points
    poly_r[0], poly_r[-1] = reference[0], reference[-1]
    return symmetric_difference_area(poly_p, poly_r)


def windowed_approximate_solution(t: float, window: float, K: float = 10.0, h_max: float = 0.25,
                                  c_kappa: float = 0.05, soliton: Optional[SolitonTable] = None,
                                  B: float = -1.0) -> AssembledCurve:
    """``C*(t)`` cut at tip-frame angle ``-window``."""
    return build_approximate_solution(t, K, h_max, c_kappa, soliton=soliton, B=B,
                                      theta_window=-t - window)


def windowed_omega(t: float, window: float, h_max: float = 0.25, c_kappa: float = 0.05,
                   soliton: Optional[SolitonTable] = None) -> np.ndarray:
    """Boundary of ``Omega(t)`` cut at tip-frame angle ``-window``."""
    from .assembly import omega_boundary

    return omega_boundary(t, h_max, c_kappa, soliton=soliton, theta_window=-t - window).points


@dataclass(frozen=True)
class FlowParams:
    """Settings for windowed flows of spiral curves (tip frame, ends pinned
    to the exact soliton on the window ray)."""

    window: float = 2.0
    K: float = 10.0
    h_max: float = 0.125
    c_kappa: float = 0.025
    gradation: float = 0.03
    order: int = 2
    remesh_every: int = 50
    dt: Optional[float] = None

    def mesh(self) -> MeshSpec:
        return MeshSpec(self.h_max, self.c_kappa, self.gradation)


def _window_state(t: float, points: np.ndarray, params: FlowParams,
                  table: SolitonTable) -> FlowState:
    return FlowState(t=float(t), points=np.asarray(points, float).copy(), closed=False,
                     boundary=window_boundary(params.window, table), frame_rate=1.0,
                     mesh=params.mesh(), order=params.order)


def flow_window(state: FlowState, t_end: float, params: FlowParams,
                callback: Optional[Callable[[FlowState], None]] = None) -> FlowState:
    from .flow import default_dt

    dt = params.dt or default_dt(state.points, 1.0)
    return evolve(state, t_end, dt, params.remesh_every, callback)


# ---------------------------------------------------------------------------
# deviation from an approximate solution


@dataclass(frozen=True)
class DuhamelResult:
    """Length of the sheet of flowed approximate curves and the deficit
    ``Delta`` over the same window."""

    t0: float
    t1: float
    length: float
    delta: float
    sheet: Optional[HomotopySheet]

    @property
    def ratio(self) -> float:
        if self.delta == 0.0:
            return 0.0 if self.length == 0.0 else float("inf")
        return self.length / self.delta


def _interval_deficit(series: Sequence, K: float, table: SolitonTable) -> np.ndarray:
    """Per-time ``int |V - kappa| ds`` along the series."""
    if all(isinstance(c, AssembledCurve) for c in series):
        return np.array([deficit_report(c.t, K, soliton=table).total_l1 for c in series])
    vals = []
    for a, b in zip(series[:-1], series[1:]):
        _, l1 = parametric_deficit(SampledCurve(a.points, closed=a.closed),
                                   SampledCurve(b.points, closed=b.closed), b.t - a.t)
        vals.append(l1)
    vals.append(vals[-1] if vals else 0.0)
    return np.array(vals)


def time_integral(values: np.ndarray, times: np.ndarray) -> float:
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))


def duhamel_deviation(approx: Sequence, params: Optional[FlowParams] = None,
                      soliton: Optional[SolitonTable] = None, n_nodes: Optional[int] = None,
                      flow: Optional[Callable] = None) -> DuhamelResult:
    """Flow each curve of an approximate solution to the last time and
    measure the sheet they form.

    ``approx`` holds curves with attributes ``t``, ``points`` and ``closed``
    on an increasing time grid.  Windowed :class:`AssembledCurve` series are
    flowed in the tip frame with ends on the window ray (``params``);
    other curves are flowed closed in the lab frame, or by ``flow(curve,
    t1)`` if given.  The flowed curves are resampled to a common node
    count, normalized and measured; ``Delta`` integrates the per-time
    deficit of the series by the trapezoid rule.
    """
    table = soliton or default_table()
    params = params or FlowParams()
    times = np.array([c.t for c in approx], dtype=float)
    if times.size < 1 or np.any(np.diff(times) <= 0):
        raise OutOfRange("approximate curves need increasing times")
    t0, t1 = float(times[0]), float(times[-1])
    if times.size == 1:
        return DuhamelResult(t0, t1, 0.0, 0.0, None)
    delta = time_integral(_interval_deficit(approx, params.K, table), times)
    finals = []
    for c in approx:
        if flow is not None:
            finals.append(np.asarray(flow(c, t1), float))
        elif isinstance(c, AssembledCurve) and not c.closed:
            finals.append(flow_window(_window_state(c.t, c.points, params, table), t1, params).points)
        else:
            st = FlowState(t=float(c.t), points=np.asarray(c.points, float), closed=c.closed, order=params.order)
            finals.append(evolve(st, t1, params.dt or 1e-3, remesh_every=0).points if c.t < t1 else st.points)
    closed = bool(approx[0].closed)
    n = n_nodes or max(f.shape[0] for f in finals)
    curves = np.stack([resample_uniform(f, closed, n) for f in finals])
    # later initial times give curves closer to the last one: eps runs with time
    sheet = normalize_homotopy(HomotopySheet(times, curves, closed))
    return DuhamelResult(t0, t1, homotopy_length(sheet), delta, sheet)


# ---------------------------------------------------------------------------
# area comparison


@dataclass(frozen=True)
class AreaCheck:
    t: float
    area: float
    bound: float
    delta: float

    @property
    def ok(self) -> bool:
        return self.area <= self.bound

    @property
    def margin(self) -> float:
        return self.bound - self.area


def area_comparison(approx_areas: Sequence[Tuple[float, float]], A0: float,
                    deficit_times: np.ndarray, deficit_values: np.ndarray,
                    margin: float = 0.1, strict: bool = True) -> List[AreaCheck]:
    """Check ``area(t) <= A0 + (1 + margin) Delta(t0, t)`` at each time.

    ``approx_areas`` lists ``(t, symmetric difference area between the
    flowed curve and the approximate solution)``; ``Delta`` integrates the
    per-time deficit samples from the first deficit time.

    Raises
    ------
    BoundViolation
        With a dump of all checks, if ``strict`` and any time fails.
    """
    dt_ = np.asarray(deficit_times, float)
    dv = np.asarray(deficit_values, float)
    out = []
    for t, area in approx_areas:
        keep = dt_ <= t
        tt = np.append(dt_[keep], t)
        vv = np.append(dv[keep], np.interp(t, dt_, dv))
        delta = time_integral(vv, tt) if tt.size > 1 else 0.0
        out.append(AreaCheck(float(t), float(area), float(A0 + (1.0 + margin) * delta), delta))
    if strict and not all(c.ok for c in out):
        dump = "; ".join(f"t={c.t:.6g} area={c.area:.4g} bound={c.bound:.4g}" for c in out)
        raise BoundViolation("area bound failed: " + dump)
    return out


@dataclass
class WindowRun:
    """Windowed flow from a square profile with the area against the
    approximate solution (``area_approx``) and against ``Omega``
    (``area_omega``) at each output time."""

    times: List[float]
    area_approx: List[float]
    area_omega: List[float]
    A0: float
    final: FlowState


def square_window_run(t0: float, t1: float, params: Optional[FlowParams] = None,
                      outputs: int = 5, rounding_radius: float = 1e-2, compare_approx: bool = True,
                      compare_omega: bool = True, soliton: Optional[SolitonTable] = None) -> WindowRun:
    """Flow the windowed square profile from ``t0`` to ``t1`` and compare it
    with ``C*(t)`` and ``Omega(t)`` at ``outputs`` evenly spaced times
    (including both ends)."""
    from .flow import SquareProfileSpec, build_square_profile

    table = soliton or default_table()
    params = params or FlowParams()
    spec = SquareProfileSpec(t0, rounding_radius, h_max=params.h_max, c_kappa=params.c_kappa,
                             gradation=params.gradation, window=params.window, h_origin=None)
    state = build_square_profile(spec, table, 1.0, order=params.order)
    state = replace(state, mesh=params.mesh())
    out_t = np.linspace(t0, t1, outputs)
    run = WindowRun([], [], [], float("nan"), state)

    def record(s: FlowState):
        geom = window_geometry(s.t, params.window, params.K, table)
        run.times.append(float(s.t))
        if compare_approx:
            ref = windowed_approximate_solution(s.t, params.window, params.K, params.h_max,
                                                params.c_kappa, table)
            run.area_approx.append(conforming_symmetric_difference(s.points, ref.points, geom, table))
        if compare_omega:
            ref = windowed_omega(s.t, params.window, params.h_max, params.c_kappa, table)
            run.area_omega.append(conforming_symmetric_difference(s.points, ref, geom, table))

    record(state)
    for te in out_t[1:]:
        state = flow_window(state, float(te), params)
        record(state)
    run.final = state
    run.A0 = run.area_approx[0] if compare_approx else float("nan")
    return run
