"""Exact 1/Ω series for the critical point and fits of measured critical points.

The critical value of Ωp solves Ωp = 1/(1 + Π̂_p), where the leading
behaviour of the three lowest lace coefficients is

    Π̂⁽⁰⁾ = (3/2)ΩΩ′p⁴,  Π̂⁽¹⁾ = Ωp² + 4ΩΩ′p⁴,  Π̂⁽²⁾ = Ωp³ + Ω(Ω−1)p⁴

up to O(Ω⁻³). Writing y = Ωp turns each into a series in 1/Ω, and the fixed
point is found one order at a time.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

HYPERCUBE_OFFSET = 1  # Ω′ = Ω − 1
TORUS_OFFSET = 2  # Ω′ = Ω − 2
MAX_DERIVED_ORDER = 2
MAX_PREDICT_ORDER = 3
FIT_DEGREE = 3

_GRAPH_OFFSETS = {"hypercube": HYPERCUBE_OFFSET, "torus": TORUS_OFFSET}


class InvOmegaSeries:
    """Truncated series sum_{k<=order} a_k Ω^-k with rational coefficients."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order: int | None = None) -> None:
        values = [Fraction(c) for c in coeffs]
        if order is None:
            order = max(len(values) - 1, 0)
        if order < 0:
            raise ValueError(f"Truncation order must be >= 0, got {order}")
        values = values[: order + 1]
        values += [Fraction(0)] * (order + 1 - len(values))
        self.coeffs: tuple[Fraction, ...] = tuple(values)
        self.order = order

    @classmethod
    def constant(cls, value, order: int) -> InvOmegaSeries:
        return cls([value], order)

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k <= self.order else Fraction(0)

    def _common(self, other: InvOmegaSeries) -> int:
        return min(self.order, other.order)

    def __add__(self, other: InvOmegaSeries) -> InvOmegaSeries:
        order = self._common(other)
        return InvOmegaSeries([self[k] + other[k] for k in range(order + 1)], order)

    def __neg__(self) -> InvOmegaSeries:
        return InvOmegaSeries([-c for c in self.coeffs], self.order)

    def __sub__(self, other: InvOmegaSeries) -> InvOmegaSeries:
        return self + (-other)

    def __mul__(self, other) -> InvOmegaSeries:
        if not isinstance(other, InvOmegaSeries):
            return InvOmegaSeries([c * Fraction(other) for c in self.coeffs], self.order)
        order = self._common(other)
        out = [Fraction(0)] * (order + 1)
        for i in range(order + 1):
            for j in range(order + 1 - i):
                out[i + j] += self[i] * other[j]
        return InvOmegaSeries(out, order)

    __rmul__ = __mul__

    def recip(self) -> InvOmegaSeries:
        """1/a by the recursion b_k = −(sum_{i=1..k} a_i b_{k−i}) / a_0."""
        if self[0] == 0:
            raise ValueError("Reciprocal needs a nonzero constant term")
        out = [1 / self[0]]
        for k in range(1, self.order + 1):
            acc = sum(self[i] * out[k - i] for i in range(1, k + 1))
            out.append(-acc / self[0])
        return InvOmegaSeries(out, self.order)

    def power(self, r: int) -> InvOmegaSeries:
        if r < 0:
            return self.recip().power(-r)
        result = InvOmegaSeries.constant(1, self.order)
        for _ in range(r):
            result = result * self
        return result

    def shift(self, s: int) -> InvOmegaSeries:
        """Multiply by Ω^-s, keeping the truncation order."""
        if s < 0:
            raise ValueError(f"shift must be >= 0, got {s}")
        return InvOmegaSeries([0] * s + list(self.coeffs), self.order)

    def evaluate(self, omega: float) -> float:
        return sum(float(c) * omega ** (-k) for k, c in enumerate(self.coeffs))

    def to_strings(self) -> list[str]:
        return [f"{c.numerator}/{c.denominator}" for c in self.coeffs]

    def __eq__(self, other) -> bool:
        if isinstance(other, InvOmegaSeries):
            return self.coeffs == other.coeffs and self.order == other.order
        if isinstance(other, (list, tuple)):
            return list(self.coeffs) == [Fraction(c) for c in other]
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.coeffs, self.order))

    def __repr__(self) -> str:
        return f"InvOmegaSeries([{', '.join(str(c) for c in self.coeffs)}], order={self.order})"


def series_arith(a: InvOmegaSeries, b: InvOmegaSeries | None, op: str, r: int = 1, s: int = 0):
    """Dispatch for ``add``, ``mul``, ``recip`` and ``compose-power`` (a^r Ω^-s)."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "recip":
        return a.recip()
    if op == "compose-power":
        return a.power(r).shift(s)
    raise ValueError(f"Unknown series operation: {op!r}")


def _pi_hat(y: InvOmegaSeries, ratio: InvOmegaSeries) -> InvOmegaSeries:
    """Π̂⁽⁰⁾ − Π̂⁽¹⁾ + Π̂⁽²⁾ with y = Ωp and ratio = Ω′/Ω."""
    order = y.order
    one = InvOmegaSeries.constant(1, order)
    y4 = y.power(4)
    pi0 = (ratio * y4).shift(2) * Fraction(3, 2)
    pi1 = y.power(2).shift(1) + (ratio * y4).shift(2) * 4
    pi2 = y.power(3).shift(2) + ((one - one.shift(1)) * y4).shift(2)
    return pi0 - pi1 + pi2


def derive_pc_series(order: int = MAX_DERIVED_ORDER, omega_prime_offset: int = HYPERCUBE_OFFSET):
    """Ωp̄_c and Π̂ at the critical point as 1/Ω series.

    Starts from Ωp = 1 + O(Ω⁻¹) and alternates Π̂ from the current Ωp with
    Ωp = 1/(1 + Π̂), gaining one order per pass.

    Returns:
        (omega_pc, pi_hat): ``[1, 1, 7/2]`` and ``[0, -1, -5/2]`` at order 2.

    Raises:
        ValueError: For order > 2; the lace coefficients above are only
            known through O(Ω⁻²) relative accuracy.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if order > MAX_DERIVED_ORDER:
        raise ValueError(
            f"order {order} is not supported: the input coefficients determine "
            f"Ωp_c only through Ω^-{MAX_DERIVED_ORDER}"
        )
    y = InvOmegaSeries.constant(1, 0)
    pi_hat = InvOmegaSeries.constant(0, 0)
    for k in range(1, order + 1):
        y = InvOmegaSeries(y.coeffs, k)
        ratio = InvOmegaSeries([1, -omega_prime_offset], k)
        pi_hat = _pi_hat(y, ratio)
        y = (InvOmegaSeries.constant(1, k) + pi_hat).recip()
    return y, pi_hat


def pc_series(omega_prime_offset: int = HYPERCUBE_OFFSET) -> InvOmegaSeries:
    """p_c = Ω⁻¹ + Ω⁻² + (7/2)Ω⁻³ as ``[0, 1, 1, 7/2]``."""
    omega_pc, _ = derive_pc_series(MAX_DERIVED_ORDER, omega_prime_offset)
    return InvOmegaSeries([0, *omega_pc.coeffs], MAX_DERIVED_ORDER + 1)


def hypercube_offset_series() -> InvOmegaSeries:
    """p_c(Q_n) − 1/(n−1) in powers of 1/n: ``[0, 0, 0, 5/2]``."""
    order = MAX_DERIVED_ORDER + 1
    geometric = InvOmegaSeries([0] + [1] * order, order)  # 1/(n−1)
    return pc_series(HYPERCUBE_OFFSET) - geometric


def reference_series() -> list[Fraction]:
    """Coefficients of Ω^-1..Ω^-5 in p_c; beyond Ω^-3 they carry no error bound."""
    return [Fraction(1), Fraction(1), Fraction(7, 2), Fraction(16), Fraction(103)]


def _check_kind(graph_kind: str) -> None:
    if graph_kind not in _GRAPH_OFFSETS:
        raise ValueError(f"graph_kind must be one of {sorted(_GRAPH_OFFSETS)}, got {graph_kind!r}")


def predict_pc(omega: float, graph_kind: str = "hypercube", order: int = MAX_PREDICT_ORDER) -> float:
    """Truncated p_c = sum_{k<=order} c_k Ω^-k; hypercubes and tori share coefficients."""
    _check_kind(graph_kind)
    if omega < 1:
        raise ValueError(f"omega must be >= 1, got {omega}")
    if not 1 <= order <= MAX_PREDICT_ORDER:
        raise ValueError(f"order must lie in 1..{MAX_PREDICT_ORDER}, got {order}")
    coeffs = pc_series(_GRAPH_OFFSETS[graph_kind]).coeffs
    return sum(float(coeffs[k]) * omega ** (-k) for k in range(1, order + 1))


def predict_omega_pc(omega: float, order: int = MAX_DERIVED_ORDER, graph_kind: str = "hypercube") -> float:
    """Ωp_c = 1 + Ω⁻¹ + (7/2)Ω⁻² truncated at Ω^-order."""
    _check_kind(graph_kind)
    if omega < 1:
        raise ValueError(f"omega must be >= 1, got {omega}")
    if not 0 <= order <= MAX_DERIVED_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_DERIVED_ORDER}, got {order}")
    omega_pc, _ = derive_pc_series(order, _GRAPH_OFFSETS[graph_kind])
    return omega_pc.evaluate(omega)


class FitResult:
    """Weighted least-squares fit of b0 + b1/Ω + b2/Ω² + b3/Ω³."""

    __slots__ = ("coefficients", "residuals", "omegas")

    def __init__(self, coefficients, residuals, omegas) -> None:
        self.coefficients = tuple(float(c) for c in coefficients)
        self.residuals = [float(r) for r in residuals]
        self.omegas = list(omegas)

    def predict(self, omega: float) -> float:
        return sum(b * omega ** (-k) for k, b in enumerate(self.coefficients))

    def __repr__(self) -> str:
        coeffs = ", ".join(f"{b:.6g}" for b in self.coefficients)
        return f"FitResult(({coeffs}), points={len(self.residuals)})"


def fit_inverse_poly(data, degree: int = FIT_DEGREE) -> FitResult:
    """Fit estimates in the basis {Ω^0, .., Ω^-degree} with weights 1/stderr.

    Args:
        data: Iterable of (omega, estimate, stderr); stderr must be > 0.

    Raises:
        ValueError: Fewer distinct omegas than coefficients, a rank-deficient
            design, or a non-positive stderr.
    """
    rows = [(float(o), float(v), float(e)) for o, v, e in data]
    if len({o for o, _, _ in rows}) < degree + 1:
        raise ValueError(f"need at least {degree + 1} distinct omegas for a degree-{degree} fit")
    if any(e <= 0 for _, _, e in rows):
        raise ValueError("every data point needs stderr > 0")
    omegas = np.array([o for o, _, _ in rows])
    values = np.array([v for _, v, _ in rows])
    weights = 1.0 / np.array([e for _, _, e in rows])
    design = omegas[:, None] ** -np.arange(degree + 1)[None, :]
    weighted = design * weights[:, None]
    norms = np.linalg.norm(weighted, axis=0)
    solution, _, rank, _ = np.linalg.lstsq(weighted / norms, values * weights, rcond=None)
    if rank < degree + 1:
        raise ValueError(f"rank-deficient design (rank {rank} < {degree + 1})")
    coefficients = solution / norms
    residuals = values - design @ coefficients
    return FitResult(coefficients, residuals, omegas.tolist())
