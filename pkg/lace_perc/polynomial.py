"""Exact polynomials in the bond density p with rational coefficients."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # Decimal reading, so 0.1 means 1/10 rather than its binary expansion.
        return Fraction(repr(value))
    return Fraction(value)


class RationalPolynomial:
    """Polynomial sum_k c_k p^k with ``Fraction`` coefficients.

    Coefficients are stored in ascending order with trailing zeros trimmed;
    the zero polynomial has an empty coefficient tuple.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()) -> None:
        values = [as_fraction(c) for c in coeffs]
        while values and values[-1] == 0:
            values.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(values)

    @classmethod
    def zero(cls) -> RationalPolynomial:
        return cls()

    @classmethod
    def one(cls) -> RationalPolynomial:
        return cls((1,))

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> RationalPolynomial:
        if degree < 0:
            raise ValueError(f"Monomial degree must be >= 0, got {degree}")
        return cls([0] * degree + [coeff])

    @classmethod
    def from_strings(cls, items) -> RationalPolynomial:
        """Inverse of :meth:`to_strings`."""
        return cls(Fraction(s) for s in items)

    # -- queries ---------------------------------------------------------

    @property
    def degree(self) -> int:
        """Degree, or -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, k: int) -> Fraction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def lowest_order(self) -> int | None:
        """Index of the first nonzero coefficient, None for zero."""
        for k, c in enumerate(self.coeffs):
            if c != 0:
                return k
        return None

    def truncate(self, order: int | None) -> RationalPolynomial:
        """Drop every term above p^order (None keeps everything)."""
        if order is None or order >= self.degree:
            return self
        if order < 0:
            return RationalPolynomial()
        return RationalPolynomial(self.coeffs[: order + 1])

    def evaluate(self, p) -> Fraction:
        """Exact Horner evaluation at a rational (floats read as decimals)."""
        x = as_fraction(p)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __call__(self, p) -> float:
        return float(self.evaluate(p))

    # -- arithmetic ------------------------------------------------------

    def _coerce(self, other) -> RationalPolynomial:
        if isinstance(other, RationalPolynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return RationalPolynomial((other,))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        size = max(len(self.coeffs), len(other.coeffs))
        return RationalPolynomial(self.coefficient(k) + other.coefficient(k) for k in range(size))

    __radd__ = __add__

    def __neg__(self) -> RationalPolynomial:
        return RationalPolynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.coeffs or not other.coeffs:
            return RationalPolynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return RationalPolynomial(out)

    __rmul__ = __mul__

    def mul_trunc(self, other: RationalPolynomial, order: int | None) -> RationalPolynomial:
        """Product truncated at p^order without forming the high terms."""
        if order is None:
            return self * other
        out = [Fraction(0)] * (order + 1)
        for i, a in enumerate(self.coeffs[: order + 1]):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs[: order + 1 - i]):
                out[i + j] += a * b
        return RationalPolynomial(out)

    def __pow__(self, exponent: int) -> RationalPolynomial:
        if exponent < 0:
            raise ValueError("Negative powers are not polynomials")
        result = RationalPolynomial.one()
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def shift(self, k: int) -> RationalPolynomial:
        """Multiply by p^k."""
        if not self.coeffs:
            return self
        return RationalPolynomial([0] * k + list(self.coeffs))

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    # -- formatting ------------------------------------------------------

    def to_strings(self) -> list[str]:
        """Coefficients as ``"num/den"`` strings, ascending."""
        return [f"{c.numerator}/{c.denominator}" for c in self.coeffs]

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mag = abs(c)
            text = f"{mag.numerator}/{mag.denominator}"
            if k:
                text += f" p^{k}"
            if not terms:
                terms.append(text if c > 0 else f"-{text}")
            else:
                terms.append(f"+ {text}" if c > 0 else f"- {text}")
        return " ".join(terms) if terms else "0"

    def __repr__(self) -> str:
        return f"RationalPolynomial({self})"


@lru_cache(maxsize=4096)
def bernoulli_weight(occupied: int, total: int, order: int | None = None) -> RationalPolynomial:
    """p^k (1−p)^(B−k), truncated at p^order when an order is given."""
    if not 0 <= occupied <= total:
        raise ValueError(f"Need 0 <= k <= B, got k={occupied}, B={total}")
    vacant = total - occupied
    top = vacant if order is None else min(vacant, order - occupied)
    if top < 0:
        return RationalPolynomial()
    coeffs = [0] * occupied + [(-1) ** r * math.comb(vacant, r) for r in range(top + 1)]
    return RationalPolynomial(coeffs)
