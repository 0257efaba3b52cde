"""Grim Reaper cap and its first-order correction.

In the tip frame the cap is the normal graph ``Z = G + f J G_p`` over the
Grim Reaper ``G(p) = (-arcsin tanh p, -ln cosh p)`` with ``f = F / tau``,
where ``F`` solves

    F'' + tanh(p) F' + F / cosh(p)**2 = <2 e2 - G, G_p>.

The operator factors as ``d/dp . (1/cosh) . d/dp . cosh``, which gives the
odd solution

    F(p) = B tanh p + int_0^p (cosh r / cosh p) <2 e2 - G/2, G>(r) dr.

The weight ``cosh r / cosh p`` is evaluated as ``exp(lncosh r - lncosh p)``
so nothing overflows for large ``|p|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import perp, rotate
from .errors import OutOfRange, QuadratureFailure
from .soliton import SolitonTable, TauQuantities, default_table, tau_quantities

# 10-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_MAX_DEPTH = 40


def lncosh(p) -> np.ndarray:
    """``ln cosh p`` without overflow."""
    a = np.abs(np.asarray(p, dtype=float))
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def gudermannian(p) -> np.ndarray:
    """``arcsin(tanh p)``."""
    return 2.0 * np.arctan(np.tanh(0.5 * np.asarray(p, dtype=float)))


def sech(p) -> np.ndarray:
    a = np.abs(np.asarray(p, dtype=float))
    e = np.exp(-a)
    return 2.0 * e / (1.0 + e * e)


def grim_reaper(p):
    """Arclength-parametrized Grim Reaper.

    Returns
    -------
    G, G_p : (n, 2) arrays
        Position and unit tangent.
    kappa : (n,) array
        Curvature ``1 / cosh p``; ``G_pp = kappa J G_p``.
    """
    p = np.asarray(p, dtype=float)
    G = np.stack([-gudermannian(p), -lncosh(p)], axis=-1)
    k = sech(p)
    Gp = np.stack([-k, -np.tanh(p)], axis=-1)
    return G, Gp, k


def driving_potential(p) -> np.ndarray:
    """``<2 e2 - G/2, G>``, whose derivative drives the correction."""
    lam = lncosh(p)
    gd = gudermannian(p)
    return -2.0 * lam - 0.5 * (lam * lam + gd * gd)


def driving_term(p) -> np.ndarray:
    """``<2 e2 - G, G_p>``, the right-hand side of the correction equation."""
    p = np.asarray(p, dtype=float)
    th = np.tanh(p)
    return -2.0 * th - gudermannian(p) * sech(p) - lncosh(p) * th


def _weighted_integrals(a: np.ndarray, b: np.ndarray, rtol: float, atol: float) -> np.ndarray:
    """``int_a^b exp(lncosh r - lncosh b) g(r) dr`` for many intervals.

    Adaptive Gauss-Legendre bisection: an interval is accepted when the
    rule on the whole interval agrees with the sum over its halves.
    """
    n = a.size
    out = np.zeros(n)
    owner = np.arange(n)
    lo, hi = a.astype(float).copy(), b.astype(float).copy()
    ref = lncosh(b)
    depth = 0

    def rule(x0, x1, lref):
        mid = 0.5 * (x0 + x1)
        half = 0.5 * (x1 - x0)
        r = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = np.exp(lncosh(r) - lref[:, None]) * driving_potential(r)
        return half * (vals @ _GL_W)

    while lo.size:
        if depth > _MAX_DEPTH:
            raise QuadratureFailure("refinement depth exceeded")
        lref = ref[owner]
        mid = 0.5 * (lo + hi)
        whole = rule(lo, hi, lref)
        left = rule(lo, mid, lref)
        right = rule(mid, hi, lref)
        split = left + right
        ok = np.abs(split - whole) <= np.maximum(atol, rtol * np.abs(split))
        np.add.at(out, owner[ok], split[ok])
        bad = ~ok
        owner = np.concatenate([owner[bad], owner[bad]])
        lo, hi = np.concatenate([lo[bad], mid[bad]]), np.concatenate([mid[bad], hi[bad]])
        depth += 1
    return out


def _half_line_integral(p: np.ndarray, rtol: float, atol: float) -> np.ndarray:
    """``I(p) = int_0^p (cosh r / cosh p) g(r) dr`` for ``p`` of one sign."""
    order = np.argsort(np.abs(p))
    ps = p[order]
    starts = np.concatenate([[0.0], ps[:-1]])
    pieces = _weighted_integrals(starts, ps, rtol, atol)
    # I(p_j) = exp(lncosh p_{j-1} - lncosh p_j) I(p_{j-1}) + piece_j
    decay = np.exp(lncosh(starts) - lncosh(ps))
    vals = np.empty_like(ps)
    acc = 0.0
    for j in range(ps.size):
        acc = decay[j] * acc + pieces[j]
        vals[j] = acc
    out = np.empty_like(p)
    out[order] = vals
    return out


def correction_F(p, B: float = -1.0, rtol: float = 1e-13, atol: float = 1e-15) -> np.ndarray:
    """The odd correction ``F(p)`` with ``F'(0) = B``.

    Raises
    ------
    QuadratureFailure
        If adaptive refinement needs more than 40 bisections.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    integral = np.zeros_like(p)
    for mask in (p > 0, p < 0):
        if np.any(mask):
            integral[mask] = _half_line_integral(p[mask], rtol, atol)
    return B * np.tanh(p) + integral


def correction_derivatives(p, F, B: float = -1.0):
    """``F'`` and ``F''`` from ``F`` through the factored equation.

    From ``(cosh p F)' = cosh p (B + g)`` with ``g = <2 e2 - G/2, G>``:
    ``F' = B + g - tanh(p) F`` and ``F'' = g' - F / cosh^2 p - tanh(p) F'``.
    """
    p = np.asarray(p, dtype=float)
    th = np.tanh(p)
    Fp = B + driving_potential(p) - th * F
    Fpp = driving_term(p) - sech(p) ** 2 * F - th * Fp
    return Fp, Fpp


def F_asymptotic(p, B: float = -1.0) -> np.ndarray:
    """Large-``|p|`` form ``B - lam^2/2 - lam - pi^2/8 + 1`` (odd extension)."""
    p = np.asarray(p, dtype=float)
    lam = lncosh(p)
    return np.sign(p) * (B - 0.5 * lam * lam - lam - np.pi ** 2 / 8 + 1.0)


@dataclass(frozen=True)
class CapProfile:
    """Cap at one time in tip-frame coordinates.

    Attributes
    ----------
    tq : TauQuantities
        ``t``, ``tau``, ``R``, ``eps``, ``R_theta`` and ``eps_prime``.
    B, K : float
        Correction constant and band constant; ``|p| <= 2 K ln tau``.
    p : (n,) array
    F, F_p, F_pp : (n,) arrays
    f, f_p, f_pp, f_t : (n,) arrays
        ``f = F / tau`` and its derivatives (``f_t = 4 F / tau^2``).
    Z, Z_p, Z_pp, Z_t : (n, 2) arrays
    """

    tq: TauQuantities
    B: float
    K: float
    p: np.ndarray
    F: np.ndarray
    F_p: np.ndarray
    F_pp: np.ndarray
    f: np.ndarray
    f_p: np.ndarray
    f_pp: np.ndarray
    f_t: np.ndarray
    Z: np.ndarray
    Z_p: np.ndarray
    Z_pp: np.ndarray
    Z_t: np.ndarray

    @property
    def t(self) -> float:
        return self.tq.t

    @property
    def tau(self) -> float:
        return self.tq.tau

    def ambient(self, Z: Optional[np.ndarray] = None) -> np.ndarray:
        """Map tip-frame points to the plane: ``e^{-tJ}(R e1 + Z / R)``."""
        Z = self.Z if Z is None else Z
        local = np.column_stack([self.tq.R + Z[:, 0] * self.tq.eps, Z[:, 1] * self.tq.eps])
        return rotate(local, -self.tq.t)


def cap_half_width(tau: float, K: float) -> float:
    return 2.0 * K * np.log(tau)


def cap_shape(p, tau: float, B: float = -1.0, F: Optional[np.ndarray] = None, corrected: bool = True):
    """``Z = G + f J G_p`` and its p- and t-derivatives at the given ``p``."""
    p = np.asarray(p, dtype=float)
    G, Gp, k = grim_reaper(p)
    JGp = perp(Gp)
    if corrected:
        if F is None:
            F = correction_F(p, B)
        Fp, Fpp = correction_derivatives(p, F, B)
    else:
        F = np.zeros_like(p)
        Fp = np.zeros_like(p)
        Fpp = np.zeros_like(p)
    f, fp, fpp = F / tau, Fp / tau, Fpp / tau
    ft = 4.0 * F / tau ** 2
    kp = -k * np.tanh(p)
    Z = G + f[:, None] * JGp
    Zp = (1.0 - k * f)[:, None] * Gp + fp[:, None] * JGp
    Zpp = -(kp * f + 2.0 * k * fp)[:, None] * Gp + (fpp + k - k * k * f)[:, None] * JGp
    Zt = ft[:, None] * JGp
    return F, Fp, Fpp, f, fp, fpp, ft, Z, Zp, Zpp, Zt


def build_cap(t: float, K: float = 10.0, n_nodes: int = 4001, soliton: Optional[SolitonTable] = None,
              B: float = -1.0, corrected: bool = True, p_max: Optional[float] = None) -> CapProfile:
    """Sample the corrected cap on ``|p| <= 2 K ln tau`` at time ``t``.

    Parameters
    ----------
    t : float
        Time, ``t <= -25``.
    K : float
        Band constant.
    n_nodes : int
        Number of uniformly spaced ``p`` nodes.
    corrected : bool
        ``False`` gives the bare Grim Reaper (``f = 0``) for comparison.
    p_max : float, optional
        Override the half-width of the ``p`` range.
    """
    if t > -25:
        raise OutOfRange("the cap construction needs t <= -25")
    if K < 2:
        raise OutOfRange("K must be at least 2")
    tq = tau_quantities(t, soliton or default_table())
    half = cap_half_width(tq.tau, K) if p_max is None else float(p_max)
    p = np.linspace(-half, half, n_nodes)
    parts = cap_shape(p, tq.tau, B, corrected=corrected)
    return CapProfile(tq, float(B), float(K), p, *parts)
