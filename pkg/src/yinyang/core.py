"""Planar curve primitives: sampling, discrete geometry and region areas.

Curves are stored as ordered point arrays.  Closed curves do not repeat the
first point.  Counterclockwise traversal gives positive enclosed area and
positive curvature on a circle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon

from .errors import DegenerateSegment, OpenCurve, SelfIntersecting

# rotation by +pi/2
J = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotate(v, angle) -> np.ndarray:
    """Apply ``exp(angle J)`` to vectors stored along the last axis."""
    v = np.asarray(v, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    x, y = v[..., 0], v[..., 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def perp(v) -> np.ndarray:
    """``J v`` for vectors stored along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def unit_vector(angle) -> np.ndarray:
    """``E1(angle) = (cos angle, sin angle)``."""
    a = np.asarray(angle, dtype=float)
    return np.stack([np.cos(a), np.sin(a)], axis=-1)


def cross(a, b) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class SampledCurve:
    """Ordered samples of a planar curve.

    Parameters
    ----------
    points : (n, 2) array
    closed : bool
        Whether the last point connects back to the first.
    params : (n,) array, optional
        Strictly increasing parameter values.  When absent, geometry uses
        the cumulative chord length.
    period : float, optional
        Parameter period of a closed curve with ``params``; defaults to the
        span plus the mean spacing.
    """

    points: np.ndarray
    closed: bool = True
    params: Optional[np.ndarray] = None
    period: Optional[float] = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if pts.shape[0] < (3 if self.closed else 2):
            raise ValueError("too few points")
        step = np.diff(pts, axis=0, append=pts[:1]) if self.closed else np.diff(pts, axis=0)
        if np.any(np.hypot(step[:, 0], step[:, 1]) <= 1e-12):
            raise DegenerateSegment("consecutive samples coincide")
        object.__setattr__(self, "points", pts)
        if self.params is not None:
            p = np.asarray(self.params, dtype=float)
            if p.shape != (pts.shape[0],) or np.any(np.diff(p) <= 0):
                raise ValueError("params must be strictly increasing, one per point")
            object.__setattr__(self, "params", p)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class CurveGeometry:
    """Discrete geometry of a sampled curve.

    ``arclength`` is the cumulative chord length from the first node;
    ``tangent`` the unit tangent and ``curvature`` the signed curvature at
    every node (``nan`` at the ends of an open curve).
    """

    arclength: np.ndarray
    tangent: np.ndarray
    curvature: np.ndarray
    length: float


def segment_lengths(points: np.ndarray, closed: bool) -> np.ndarray:
    d = np.diff(points, axis=0, append=points[:1]) if closed else np.diff(points, axis=0)
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def parameter_derivatives(values: np.ndarray, params: np.ndarray, closed: bool,
                          period: Optional[float] = None):
    """First and second derivatives on a nonuniform grid.

    Three-point stencils, exact for quadratics.  For closed curves the grid
    wraps around with ``period`` (default: ``params`` span plus the mean
    spacing); open ends use one-sided stencils.
    """
    f = np.asarray(values, dtype=float)
    p = np.asarray(params, dtype=float)
    if closed:
        if period is None:
            raise ValueError("closed curves need the parameter period")
        h1 = np.diff(p, prepend=p[-1] - period)
        h2 = np.diff(p, append=p[0] + period)
        fm = np.roll(f, 1, axis=0)
        fp = np.roll(f, -1, axis=0)
    else:
        h = np.diff(p)
        h1 = np.concatenate([[h[0]], h])
        h2 = np.concatenate([h, [h[-1]]])
        fm = np.concatenate([f[:1], f[:-1]])
        fp = np.concatenate([f[1:], f[-1:]])
    shape = (-1,) + (1,) * (f.ndim - 1)
    h1 = h1.reshape(shape)
    h2 = h2.reshape(shape)
    d1 = (-h2 / (h1 * (h1 + h2))) * fm + ((h2 - h1) / (h1 * h2)) * f + (h1 / (h2 * (h1 + h2))) * fp
    d2 = 2.0 * (fm / (h1 * (h1 + h2)) - f / (h1 * h2) + fp / (h2 * (h1 + h2)))
    if not closed:
        # second-order one-sided first derivatives, first-order second derivatives
        for idx, sgn in ((0, 1), (-1, -1)):
            i0, i1, i2 = (0, 1, 2) if sgn > 0 else (-1, -2, -3)
            if f.shape[0] < 3:
                d1[idx] = (f[i1] - f[i0]) / (p[i1] - p[i0])
                d2[idx] = 0.0
                continue
            a = p[i1] - p[i0]
            b = p[i2] - p[i1]
            d1[idx] = (-(2 * a + b) / (a * (a + b))) * f[i0] + ((a + b) / (a * b)) * f[i1] - (a / (b * (a + b))) * f[i2]
            d2[idx] = 2.0 * (f[i0] / (a * (a + b)) - f[i1] / (a * b) + f[i2] / (b * (a + b)))
    return d1, d2


def compute_geometry(curve: SampledCurve) -> CurveGeometry:
    """Arclength, unit tangent and signed curvature by central differences.

    Curvature is ``<X_pp, J X_p> / |X_p|^3`` with derivatives taken in the
    stored parameter (or chord length when there is none).
    """
    pts = curve.points
    seg = segment_lengths(pts, curve.closed)
    n = pts.shape[0]
    arclen = np.concatenate([[0.0], np.cumsum(seg[: n - 1])])
    length = float(seg.sum())
    if curve.params is not None:
        params = curve.params
        period = None
        if curve.closed:
            period = curve.period
            if period is None:
                period = (params[-1] - params[0]) * n / (n - 1)
    else:
        params = arclen
        period = length
    xp, xpp = parameter_derivatives(pts, params, curve.closed, period)
    speed = np.hypot(xp[:, 0], xp[:, 1])
    tangent = xp / speed[:, None]
    kappa = cross(xp, xpp) / speed ** 3
    if not curve.closed:
        kappa = kappa.copy()
        kappa[[0, -1]] = np.nan
    return CurveGeometry(arclength=arclen, tangent=tangent, curvature=kappa, length=length)


def total_curvature(curve: SampledCurve) -> float:
    """Trapezoidal ``integral kappa ds`` over a closed curve."""
    if not curve.closed:
        raise OpenCurve("total curvature needs a closed curve")
    geo = compute_geometry(curve)
    seg = segment_lengths(curve.points, True)
    w = 0.5 * (seg + np.roll(seg, 1))
    return float(np.sum(geo.curvature * w))


def resample_by_arclength(curve: SampledCurve, n: int) -> SampledCurve:
    """Resample to ``n`` nodes equally spaced in chord length."""
    pts = curve.points
    if curve.closed:
        loop = np.vstack([pts, pts[:1]])
    else:
        loop = pts
    seg = segment_lengths(loop, False)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    target = np.arange(n) * (total / n) if curve.closed else np.linspace(0.0, total, n)
    out = np.column_stack([np.interp(target, s, loop[:, 0]), np.interp(target, s, loop[:, 1])])
    return SampledCurve(out, closed=curve.closed, params=target,
                        period=total if curve.closed else None)


def signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def enclosed_area(curve: SampledCurve) -> float:
    """Shoelace area; positive for counterclockwise curves."""
    if not curve.closed:
        raise OpenCurve("area needs a closed curve")
    return signed_area(curve.points)


def _as_points(curve) -> np.ndarray:
    if isinstance(curve, SampledCurve):
        if not curve.closed:
            raise OpenCurve("region operations need closed curves")
        return curve.points
    return np.asarray(curve, dtype=float)


def is_simple(points: np.ndarray) -> bool:
    """Whether the closed polygon through ``points`` has no crossings."""
    return bool(shapely.is_simple(LinearRing(points)))


def _polygon(points: np.ndarray) -> Polygon:
    poly = Polygon(points)
    if not poly.is_valid:
        # a zero-width spike is tolerated, genuine crossings are not
        fixed = shapely.make_valid(poly)
        if abs(fixed.area - abs(signed_area(points))) > 1e-10 * max(1.0, fixed.area):
            raise SelfIntersecting("boundary crosses itself")
        return fixed
    return poly


def symmetric_difference_area(a, b) -> float:
    """Area of the symmetric difference of the regions bounded by two curves."""
    pa = _polygon(_as_points(a))
    pb = _polygon(_as_points(b))
    return float(pa.symmetric_difference(pb).area)


def intersection_area(a, b) -> float:
    pa = _polygon(_as_points(a))
    pb = _polygon(_as_points(b))
    return float(pa.intersection(pb).area)
