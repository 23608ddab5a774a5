"""Scalar q-objects: shifted factorials, Jacobi theta, basic hypergeometric
series, the two q-exponentials and the two q-analogues of the Airy function.

Everything here works in complex double precision.  Series and products are
truncated by the rule in :class:`EvalConfig`: stop after ``tail_window``
consecutive terms whose magnitude is below ``tol`` times the running scale.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

from .errors import (
    ConsistencyError,
    ConvergenceRadiusError,
    DivergentSeriesError,
    DomainError,
    NonConvergence,
    PoleError,
)

EPS = 2.220446049250313e-16
# |1 - a q^k| below this is an exact zero factor
ZERO_FACTOR = 1e-14
POLE_RTOL = 1e-12


@dataclass(frozen=True)
class Base:
    """The deformation parameter q, with 0 < |q| < 1."""

    q: complex

    def __post_init__(self):
        q = complex(self.q)
        if not (0.0 < abs(q) < 1.0):
            raise DomainError(f"base must satisfy 0 < |q| < 1, got q={q}")
        object.__setattr__(self, "q", q)

    def power(self, k: int) -> "Base":
        return Base(self.q**k)

    def __repr__(self) -> str:
        return f"Base({self.q!r})"


@dataclass(frozen=True)
class EvalConfig:
    tol: float = 1e-16
    max_terms: int = 10000
    tail_window: int = 3

    def __post_init__(self):
        if self.tol <= 0 or self.max_terms <= 0 or self.tail_window <= 0:
            raise DomainError("EvalConfig fields must be positive")


DEFAULT = EvalConfig()


@dataclass(frozen=True)
class HyperSpec:
    """Parameters of r-phi-s(upper; lower; q, x)."""

    upper: tuple
    lower: tuple
    base: Base

    def __post_init__(self):
        upper = tuple(complex(a) for a in self.upper)
        lower = tuple(complex(b) for b in self.lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "lower", lower)
        for b in lower:
            m = spiral_index(b, 1.0, self.base, rtol=ZERO_FACTOR)
            if m is not None and m <= 0:
                raise DomainError(f"lower parameter {b} equals q^{m}; (b;q)_n vanishes")

    @property
    def r(self) -> int:
        return len(self.upper)

    @property
    def s(self) -> int:
        return len(self.lower)

    @property
    def kind(self) -> str:
        d = self.r - self.s
        if d < 1:
            return "entire"
        if d == 1:
            return "radius-one"
        return "divergent"


def spiral_index(z: complex, lam: complex, base: Base, rtol: float) -> int | None:
    """Return n with ``|z - lam q^n| <= rtol |lam q^n|``, or None.

    Only moduli are used to locate the candidate n, so this works for
    complex q as well.
    """
    z, lam = complex(z), complex(lam)
    if z == 0 or lam == 0:
        return None
    lq = math.log(abs(base.q))
    n0 = round(math.log(abs(z) / abs(lam)) / lq)
    for n in (n0 - 1, n0, n0 + 1):
        w = lam * base.q**n
        if abs(z - w) <= rtol * abs(w):
            return n
    return None


def spiral_distance(z: complex, lam: complex, base: Base) -> float:
    """Smallest relative distance ``|z/(lam q^n) - 1|`` over integer n."""
    z, lam = complex(z), complex(lam)
    lq = math.log(abs(base.q))
    n0 = round(math.log(abs(z) / abs(lam)) / lq)
    return min(abs(z / (lam * base.q**n) - 1.0) for n in range(n0 - 2, n0 + 3))


def sum_series(terms: Iterable[complex], cfg: EvalConfig = DEFAULT) -> complex:
    """Sum a convergent series with the tail-window stopping rule."""
    total = 0j
    scale = 0.0
    small = 0
    for n, t in enumerate(terms):
        if n >= cfg.max_terms:
            raise NonConvergence(f"series did not settle within {cfg.max_terms} terms")
        total += t
        at = abs(t)
        scale = max(scale, at, abs(total))
        if at <= cfg.tol * scale:
            small += 1
            if small >= cfg.tail_window:
                return total
        else:
            small = 0
    return total


# ---------------------------------------------------------------- products


def qpochhammer_finite(a: complex, base: Base, n: int) -> complex:
    """(a; q)_n = prod_{k<n} (1 - a q^k)."""
    if n < 0:
        raise DomainError("n must be >= 0")
    a = complex(a)
    p = 1 + 0j
    qk = 1 + 0j
    for _ in range(n):
        p *= 1 - a * qk
        qk *= base.q
    return p


def qpochhammer_infinite(a: complex, base: Base, cfg: EvalConfig = DEFAULT) -> complex:
    """(a; q)_inf.  Returns exactly 0 when a is (numerically) some q^-m, m >= 0."""
    a = complex(a)
    q = base.q
    p = 1 + 0j
    aqk = a
    small = 0
    for _ in range(cfg.max_terms):
        f = 1 - aqk
        if abs(f) <= ZERO_FACTOR:
            return 0j
        p *= f
        if abs(aqk) < cfg.tol:
            small += 1
            if small >= cfg.tail_window:
                return p
        else:
            small = 0
        aqk *= q
    raise NonConvergence(f"(a;q)_inf did not settle for a={a}, q={q}")


def qpoch_inf(args: Sequence[complex], base: Base, cfg: EvalConfig = DEFAULT) -> complex:
    """(a_1, ..., a_m; q)_inf."""
    p = 1 + 0j
    for a in args:
        p *= qpochhammer_infinite(a, base, cfg)
    return p


@lru_cache(maxsize=256)
def _qq_inf(q: complex, cfg: EvalConfig) -> complex:
    return qpochhammer_infinite(q, Base(q), cfg)


def qq_inf(base: Base, cfg: EvalConfig = DEFAULT) -> complex:
    """(q; q)_inf (memoised; pure)."""
    return _qq_inf(base.q, cfg)


# ------------------------------------------------------------------- theta


def theta_product(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    x = complex(x)
    if x == 0:
        raise DomainError("theta is undefined at x = 0")
    q = base.q
    return qq_inf(base, cfg) * qpochhammer_infinite(-x, base, cfg) * qpochhammer_infinite(-q / x, base, cfg)


def _theta_terms(base: Base, x: complex, cfg: EvalConfig) -> tuple[complex, float]:
    """Bilateral sum of q^{n(n-1)/2} x^n; returns (sum, sum of |terms|)."""
    q = base.q
    total = 1 + 0j
    absum = 1.0
    peak = 1.0
    for direction in (1, -1):
        t = 1 + 0j
        qn = 1 + 0j if direction == 1 else 1 / q  # q^n for n = 0 or n = -1
        small = 0
        for _ in range(cfg.max_terms):
            if direction == 1:
                t = t * qn * x
                qn *= q
            else:
                t = t / (qn * x)
                qn /= q
            at = abs(t)
            if not math.isfinite(at):
                raise NonConvergence("theta bilateral sum overflowed")
            total += t
            absum += at
            peak = max(peak, at)
            if at <= cfg.tol * peak:
                small += 1
                if small >= cfg.tail_window:
                    break
            else:
                small = 0
        else:
            raise NonConvergence("theta bilateral sum did not settle")
    return total, absum


def theta_series(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """theta_q(x) by the truncated bilateral sum."""
    x = complex(x)
    if x == 0:
        raise DomainError("theta is undefined at x = 0")
    return _theta_terms(base, x, cfg)[0]


def theta(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """Jacobi theta_q(x) = sum_n q^{n(n-1)/2} x^n = (q, -x, -q/x; q)_inf.

    The triple product is returned.  The bilateral sum is evaluated as a
    cross-check; a disagreement larger than 1e-8 relative that is not
    explained by the rounding floor of the sum raises ConsistencyError.
    """
    x = complex(x)
    if x == 0:
        raise DomainError("theta is undefined at x = 0")
    prod = theta_product(base, x, cfg)
    if not cmath.isfinite(prod):
        return prod
    ser, absum = _theta_terms(base, x, cfg)
    err = abs(prod - ser)
    if err > 1e-8 * abs(prod) and err > 64 * EPS * absum:
        raise ConsistencyError(
            f"theta product and bilateral sum disagree at q={base.q}, x={x}: {prod} vs {ser}"
        )
    return prod


def theta_zero_distance(base: Base, x: complex) -> float:
    """Relative distance of x from the zero set -q^Z of theta_q."""
    return spiral_distance(x, -1.0, base)


# ------------------------------------------------------------------ series


def _phi_terms(spec: HyperSpec, x: complex) -> Iterator[complex]:
    q = spec.base.q
    e = 1 + spec.s - spec.r
    t = 1 + 0j
    qn = 1 + 0j
    while True:
        yield t
        num = 1 + 0j
        for a in spec.upper:
            num *= 1 - a * qn
        den = 1 - qn * q
        for b in spec.lower:
            den *= 1 - b * qn
        t = t * num / den * (-qn) ** e * x
        qn *= q


def phi(spec: HyperSpec, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """Basic hypergeometric series r-phi-s(upper; lower; q, x)."""
    x = complex(x)
    kind = spec.kind
    if x == 0:
        return 1 + 0j
    if kind == "divergent":
        raise DivergentSeriesError(
            f"{spec.r}phi{spec.s} has radius of convergence 0; resum it instead"
        )
    if kind == "radius-one" and abs(x) >= 1:
        raise ConvergenceRadiusError(f"{spec.r}phi{spec.s} needs |x| < 1, got |x|={abs(x)}")
    return sum_series(_phi_terms(spec, x), cfg)


def phi_coefficients(spec: HyperSpec, order: int) -> list[complex]:
    """Taylor coefficients a_0..a_order of the (possibly divergent) series."""
    out = []
    for n, t in enumerate(_phi_terms(spec, 1.0)):
        if n > order:
            break
        out.append(t)
    return out


def eq_series(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """sum x^n / (q;q)_n, only for |x| < 1."""
    return phi(HyperSpec((0,), (), base), x, cfg)


def Eq_series(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """sum q^{n(n-1)/2} x^n / (q;q)_n (entire)."""
    return phi(HyperSpec((), (), base), -complex(x), cfg)


def eq_small(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """e_q(x) = 1/(x;q)_inf, continued meromorphically to all x off q^{-N}."""
    x = complex(x)
    if x == 0:
        return 1 + 0j
    m = spiral_index(x, 1.0, base, rtol=POLE_RTOL)
    if m is not None and m <= 0:
        raise PoleError(f"e_q has a pole at x = q^{m} (x={x})")
    return 1 / qpochhammer_infinite(x, base, cfg)


def Eq_big(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """E_q(x) = (-x;q)_inf."""
    return qpochhammer_infinite(-complex(x), base, cfg)


def ramanujan_Aq(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """Ramanujan function A_q(x) = sum q^{n^2} (-x)^n / (q;q)_n."""
    q = base.q
    x = complex(x)

    def terms():
        t = 1 + 0j
        qn = 1 + 0j
        while True:
            yield t
            # ratio t_{n+1}/t_n = q^{2n+1} (-x) / (1 - q^{n+1})
            t = t * qn * qn * q * (-x) / (1 - qn * q)
            qn *= q

    return sum_series(terms(), cfg)


def qairy_Aiq(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """q-Airy function Ai_q(x) = sum (-1)^n q^{n(n-1)/2} (-x)^n / (-q, q; q)_n."""
    q = base.q
    x = complex(x)

    def terms():
        t = 1 + 0j
        qn = 1 + 0j
        while True:
            yield t
            t = t * qn * x / (1 - (qn * q) ** 2)
            qn *= q

    return sum_series(terms(), cfg)


def sign_character(base: Base, lam: complex, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """theta(-lam x)/theta(lam x); flips sign under x -> qx."""
    return theta(base, -lam * x, cfg) / theta(base, lam * x, cfg)


def log_character(base: Base, x: complex) -> complex:
    """exp(pi i log x / log q) on principal branches; also flips sign under x -> qx."""
    return cmath.exp(1j * math.pi * cmath.log(complex(x)) / cmath.log(base.q))


Evaluator = Callable[[complex], complex]
