"""Truncated formal power series, q-difference operators and q-Borel maps."""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError
from .qcore import Base, HyperSpec, phi_coefficients
from .report import VerificationReport, make_report

DEFAULT_ORDER = 32


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("a series needs at least one coefficient")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FormalPowerSeries:
    """Coefficients a_0..a_N of a power series truncated at order N."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self) -> int:
        return self.coeffs.size

    def __getitem__(self, n: int) -> complex:
        return complex(self.coeffs[n])

    def __eq__(self, other) -> bool:
        return isinstance(other, FormalPowerSeries) and np.array_equal(self.coeffs, other.coeffs)

    def _common(self, other: "FormalPowerSeries") -> int:
        return min(self.order, other.order) + 1

    def __add__(self, other: "FormalPowerSeries") -> "FormalPowerSeries":
        n = self._common(other)
        return FormalPowerSeries(self.coeffs[:n] + other.coeffs[:n])

    def __sub__(self, other: "FormalPowerSeries") -> "FormalPowerSeries":
        n = self._common(other)
        return FormalPowerSeries(self.coeffs[:n] - other.coeffs[:n])

    def __mul__(self, other):
        if isinstance(other, FormalPowerSeries):
            n = self._common(other)
            return FormalPowerSeries(np.convolve(self.coeffs[:n], other.coeffs[:n])[:n])
        return FormalPowerSeries(self.coeffs * complex(other))

    __rmul__ = __mul__

    def truncate(self, order: int) -> "FormalPowerSeries":
        return FormalPowerSeries(self.coeffs[: order + 1])

    def evaluate(self, x: complex) -> complex:
        """Value of the truncated polynomial at x (Horner)."""
        acc = 0j
        for c in self.coeffs[::-1]:
            acc = acc * x + c
        return complex(acc)

    def __call__(self, x: complex) -> complex:
        return self.evaluate(x)

    @classmethod
    def of_hypergeometric(cls, spec: HyperSpec, order: int = DEFAULT_ORDER, scale: complex = 1) -> "FormalPowerSeries":
        """Coefficients of r-phi-s(spec; scale * x)."""
        c = np.array(phi_coefficients(spec, order), dtype=complex)
        return cls(c * complex(scale) ** np.arange(order + 1))


@dataclass(frozen=True)
class QDiffOperator:
    """Sum of c * x^m * sigma_q^l, stored as (m, l, c) triples."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((int(m), int(l), complex(c)) for m, l, c in self.terms)
        for m, l, _ in terms:
            if m < 0 or l < 0:
                raise DomainError("operator terms need m >= 0 and l >= 0")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def ramanujan(cls, base: Base) -> "QDiffOperator":
        """q x sigma^2 - sigma + 1."""
        return cls(((1, 2, base.q), (0, 1, -1), (0, 0, 1)))

    @classmethod
    def qairy(cls) -> "QDiffOperator":
        """sigma^2 + x sigma - 1."""
        return cls(((0, 2, 1), (1, 1, 1), (0, 0, -1)))

    @classmethod
    def ramanujan_type(cls, K: complex) -> "QDiffOperator":
        """K x sigma^2 - sigma + 1."""
        return cls(((1, 2, K), (0, 1, -1), (0, 0, 1)))

    @classmethod
    def qexp_small(cls) -> "QDiffOperator":
        """sigma - (1 - x), annihilates e_q."""
        return cls(((0, 1, 1), (0, 0, -1), (1, 0, 1)))

    @classmethod
    def qexp_big(cls) -> "QDiffOperator":
        """(1 + x) sigma - 1, annihilates E_q."""
        return cls(((0, 1, 1), (1, 1, 1), (0, 0, -1)))

    def __call__(self, u: Callable[[complex], complex], base: Base, x: complex) -> complex:
        """Pointwise action: sum c x^m u(q^l x)."""
        x = complex(x)
        return sum(c * x**m * u(base.q**l * x) for m, l, c in self.terms)

    def terms_at(self, u: Callable[[complex], complex], base: Base, x: complex) -> list[complex]:
        x = complex(x)
        return [c * x**m * u(base.q**l * x) for m, l, c in self.terms]


def apply_operator(op: QDiffOperator, f: FormalPowerSeries, base: Base) -> FormalPowerSeries:
    """Coefficientwise action; x^m pushes coefficients up and truncates the top."""
    N = f.order
    n = np.arange(N + 1)
    out = np.zeros(N + 1, dtype=complex)
    for m, l, c in op.terms:
        if m > N:
            continue
        k = n[: N + 1 - m]
        out[m:] += c * f.coeffs[: N + 1 - m] * base.q ** (l * k)
    return FormalPowerSeries(out)


def _tri(n: np.ndarray) -> np.ndarray:
    return n * (n - 1) // 2


def qborel_plus(f: FormalPowerSeries, base: Base, level: int = 1) -> FormalPowerSeries:
    """a_n -> a_n (q^level)^{n(n-1)/2}."""
    if level < 1:
        raise DomainError("Borel level must be >= 1")
    n = np.arange(f.order + 1)
    return FormalPowerSeries(f.coeffs * base.q ** (level * _tri(n)))


def qborel_plus_inverse(g: FormalPowerSeries, base: Base, level: int = 1) -> FormalPowerSeries:
    if level < 1:
        raise DomainError("Borel level must be >= 1")
    n = np.arange(g.order + 1)
    return FormalPowerSeries(g.coeffs / base.q ** (level * _tri(n)))


def qborel_minus(f: FormalPowerSeries, base: Base) -> FormalPowerSeries:
    """a_n -> a_n q^{-n(n-1)/2}."""
    n = np.arange(f.order + 1)
    return FormalPowerSeries(f.coeffs / base.q ** _tri(n))


def shift_power(f: FormalPowerSeries, m: int) -> FormalPowerSeries:
    """x^m f, truncated at the order of f."""
    out = np.zeros_like(f.coeffs)
    if m <= f.order:
        out[m:] = f.coeffs[: f.order + 1 - m]
    return FormalPowerSeries(out)


def sigma_power(f: FormalPowerSeries, base: Base, l: int) -> FormalPowerSeries:
    """sigma_q^l f; l must be non-negative."""
    if l < 0:
        raise DomainError(f"negative q-shift sigma^{l} is not supported")
    n = np.arange(f.order + 1)
    return FormalPowerSeries(f.coeffs * base.q ** (l * n))


def check_operational_identity(
    m: int, l: int, f: FormalPowerSeries, base: Base, tol: float = 1e-13
) -> VerificationReport:
    """Compare B^-(t^m sigma^l f) with q^{-m(m-1)/2} tau^m sigma^{l-m} B^- f."""
    if m < 0 or l < 0:
        raise DomainError("m and l must be non-negative")
    if l < m:
        raise DomainError(f"l < m gives a negative shift sigma^{l - m}; only l >= m is handled")
    lhs = qborel_minus(shift_power(sigma_power(f, base, l), m), base)
    rhs = shift_power(sigma_power(qborel_minus(f, base), base, l - m), m) * base.q ** (-(m * (m - 1) // 2))
    dev = np.abs(lhs.coeffs - rhs.coeffs)
    i = int(np.argmax(dev))
    scale = float(max(np.max(np.abs(lhs.coeffs)), np.max(np.abs(rhs.coeffs)), 1e-300))
    return make_report(
        "operational_identity",
        base.q,
        None,
        lhs.coeffs[i],
        rhs.coeffs[i],
        tol,
        scale=scale,
        metadata={"m": m, "l": l, "order": f.order, "max_coeff_deviation": float(dev[i]), "index": i},
    )


def principal_sqrt(base: Base) -> Base:
    """p = sqrt(q) on the principal branch."""
    return Base(cmath.sqrt(base.q))


def covering_transform(u: Callable[[complex], complex]) -> Callable[[complex], complex]:
    """v(t) = u(t^2)."""

    def v(t: complex) -> complex:
        t = complex(t)
        return u(t * t)

    return v


def cover_operator(op: QDiffOperator) -> QDiffOperator:
    """Rewrite an operator in x = t^2: x^m becomes t^{2m}; sigma_q becomes sigma_p."""
    return QDiffOperator(tuple((2 * m, l, c) for m, l, c in op.terms))


def coefficient_ratios(coeffs: Sequence[complex]) -> list[float]:
    """|a_{n+1}/a_n| for a coefficient list; used by divergence diagnostics."""
    return [abs(coeffs[n + 1] / coeffs[n]) for n in range(len(coeffs) - 1) if coeffs[n] != 0]


def series_from(values: Iterable[complex]) -> FormalPowerSeries:
    return FormalPowerSeries(list(values))
