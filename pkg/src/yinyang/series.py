"""Truncated power series with exact rational coefficients.

A :class:`Series` stores ``a_0 + a_1 x + ... + a_N x^N`` and discards every
term beyond ``x^N``.  Coefficients are :class:`fractions.Fraction` so the
asymptotic expansion of the soliton can be derived without rounding.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


class Series:
    """Power series in one variable truncated after ``x**order``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable, order: int):
        c = [_frac(a) for a in coeffs][: order + 1]
        c += [Fraction(0)] * (order + 1 - len(c))
        self.coeffs = c

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, value, order: int) -> "Series":
        return cls([value], order)

    @classmethod
    def variable(cls, order: int) -> "Series":
        return cls([0, 1], order)

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k]

    def __repr__(self) -> str:
        return f"Series({[str(a) for a in self.coeffs]})"

    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            if other.order != self.order:
                raise ValueError("series orders differ")
            return other
        return Series.constant(other, self.order)

    def __add__(self, other) -> "Series":
        o = self._coerce(other)
        return Series([a + b for a, b in zip(self.coeffs, o.coeffs)], self.order)

    __radd__ = __add__

    def __neg__(self) -> "Series":
        return Series([-a for a in self.coeffs], self.order)

    def __sub__(self, other) -> "Series":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Series":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Series":
        if not isinstance(other, Series):
            s = _frac(other)
            return Series([a * s for a in self.coeffs], self.order)
        o = self._coerce(other)
        n = self.order
        out = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j in range(n + 1 - i):
                out[i + j] += a * o.coeffs[j]
        return Series(out, n)

    __rmul__ = __mul__

    def reciprocal(self) -> "Series":
        """Multiplicative inverse; needs a nonzero constant term."""
        a0 = self.coeffs[0]
        if a0 == 0:
            raise ZeroDivisionError("series has zero constant term")
        n = self.order
        out = [Fraction(0)] * (n + 1)
        out[0] = 1 / a0
        for k in range(1, n + 1):
            acc = sum((self.coeffs[j] * out[k - j] for j in range(1, k + 1)), Fraction(0))
            out[k] = -acc / a0
        return Series(out, n)

    def __truediv__(self, other) -> "Series":
        if not isinstance(other, Series):
            return self * (1 / _frac(other))
        return self * other.reciprocal()

    def derivative(self) -> "Series":
        """Term-wise derivative; the top coefficient becomes zero."""
        c = [k * self.coeffs[k] for k in range(1, self.order + 1)]
        return Series(c, self.order)

    def shift(self, k: int) -> "Series":
        """Multiply by ``x**k`` (k >= 0)."""
        return Series([Fraction(0)] * k + self.coeffs, self.order)

    def compose(self, taylor: Sequence) -> "Series":
        """Evaluate ``sum_k taylor[k] * self**k``; needs zero constant term."""
        if self.coeffs[0] != 0:
            raise ValueError("inner series must vanish at the origin")
        n = self.order
        out = Series.constant(0, n)
        power = Series.constant(1, n)
        for k, a in enumerate(taylor[: n + 1]):
            if k > 0:
                power = power * self
            out = out + power * a
        return out

    def sqrt(self) -> "Series":
        """Square root of a series with constant term 1."""
        if self.coeffs[0] != 1:
            raise ValueError("sqrt needs a unit constant term")
        n = self.order
        # binomial series (1 + w)^(1/2)
        taylor = [Fraction(1)]
        for k in range(1, n + 1):
            taylor.append(taylor[-1] * (Fraction(1, 2) - (k - 1)) / k)
        return (self - 1).compose(taylor)

    def reversion(self) -> "Series":
        """Compositional inverse of ``x + a_2 x^2 + ...``."""
        if self.coeffs[0] != 0 or self.coeffs[1] != 1:
            raise ValueError("reversion needs a_0 = 0 and a_1 = 1")
        n = self.order
        x = Series.variable(n)
        tail = self - x  # f(x) = x + tail(x)
        inv = x
        # fixed point g = x - tail(g); each pass fixes one more coefficient
        for _ in range(n):
            inv = x - inv.compose(tail.coeffs)
        return inv


def arctan_taylor(order: int) -> list:
    """Taylor coefficients of arctan about 0."""
    out = [Fraction(0)] * (order + 1)
    for k in range(1, order + 1, 2):
        out[k] = Fraction((-1) ** ((k - 1) // 2), k)
    return out
