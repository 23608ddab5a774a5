"""q-Laplace transforms and the resummation pipelines for 2phi0 and rphi0.

First kind: a bilateral sum over the q-spiral ``[lam; q^s]`` weighted by
``1/theta_{q^s}``.  Second kind: a circle integral against ``theta_q(x/xi)``,
evaluated with the periodic trapezoid rule.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import (
    DomainError,
    NonConvergence,
    QuadratureError,
    SpiralPoleError,
    TailError,
)
from .qcore import (
    DEFAULT,
    Base,
    EvalConfig,
    eq_small,
    qpochhammer_finite,
    qpochhammer_infinite,
    qq_inf,
    spiral_index,
    theta,
)

Evaluator = Callable[[complex], complex]

SPIRAL_RTOL = 1e-10
SPIRAL_TAIL_RTOL = 1e-12
# terms below this fraction of the largest term end a spiral direction
SPIRAL_STOP = 1e-17
SPIRAL_MIN_SWEEP = 6
SPIRAL_MAX_WINDOW = 2000


@dataclass(frozen=True)
class Spiral:
    """The discrete set {lam q^{s n} : n in Z}."""

    lam: complex
    level: int
    base: Base

    def __post_init__(self):
        lam = complex(self.lam)
        if lam == 0:
            raise DomainError("spiral point lambda must be nonzero")
        if self.level < 1:
            raise DomainError("spiral level must be >= 1")
        object.__setattr__(self, "lam", lam)
        if spiral_index(lam, 1.0, self.step, rtol=SPIRAL_RTOL) is not None:
            raise DomainError(f"lambda={lam} lies on the base spiral [1; q^{self.level}]")

    @property
    def step(self) -> Base:
        return self.base.power(self.level)

    def point(self, n: int) -> complex:
        return self.lam * self.step.q**n

    def contains(self, z: complex, rtol: float = SPIRAL_RTOL) -> bool:
        return spiral_index(z, self.lam, self.step, rtol) is not None


@dataclass(frozen=True)
class Contour:
    radius: float
    points: int = 256

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("contour radius must be positive")
        if self.points < 64:
            raise DomainError("contour needs at least 64 points")


@dataclass(frozen=True)
class SpiralSum:
    value: complex
    window: int
    tail: float  # relative size of the outermost tail_window terms
    metadata: dict = field(default_factory=dict)


def _spiral_term(phi: Evaluator, spiral: Spiral, x: complex, n: int, cfg: EvalConfig) -> complex:
    xi = spiral.point(n)
    th = theta(spiral.step, xi / x, cfg)
    if not cmath.isfinite(th):
        return 0j
    val = phi(xi)
    if val == 0:
        return 0j
    return val / th


def spiral_sum(
    phi: Evaluator,
    spiral: Spiral,
    x: complex,
    window: int | None = None,
    cfg: EvalConfig = DEFAULT,
) -> SpiralSum:
    """Sum phi(lam q^{sn}) / theta_{q^s}(lam q^{sn} / x) over n.

    With ``window=None`` each direction is swept outward until
    ``cfg.tail_window`` consecutive terms fall below 1e-17 of the largest
    term.  With an explicit window the sum runs over |n| <= window and the
    outermost terms must be below 1e-12 of the total, else TailError.
    """
    x = complex(x)
    if x == 0:
        raise DomainError("q-Laplace transform is undefined at x = 0")
    if spiral.contains(-x):
        raise SpiralPoleError(f"x={x} lies on the excluded spiral [-lambda; q^{spiral.level}]")
    k = cfg.tail_window
    if window is not None:
        if window < k:
            raise DomainError(f"window must be >= {k}")
        terms = {n: _spiral_term(phi, spiral, x, n, cfg) for n in range(-window, window + 1)}
        w = window
    else:
        terms = {0: _spiral_term(phi, spiral, x, 0, cfg)}
        peak = abs(terms[0])
        reach = {}
        for d in (1, -1):
            small = 0
            n = 0
            while True:
                n += d
                if abs(n) > SPIRAL_MAX_WINDOW:
                    raise TailError("spiral sum did not settle")
                t = _spiral_term(phi, spiral, x, n, cfg)
                terms[n] = t
                peak = max(peak, abs(t))
                if abs(t) <= SPIRAL_STOP * peak:
                    small += 1
                    if small >= k and abs(n) >= SPIRAL_MIN_SWEEP:
                        break
                else:
                    small = 0
            reach[d] = abs(n)
        w = max(reach.values())
        for n in range(-w, w + 1):
            if n not in terms:
                terms[n] = _spiral_term(phi, spiral, x, n, cfg)
    ordered = [terms[n] for n in range(-w, w + 1)]
    value = complex(math.fsum(t.real for t in ordered), math.fsum(t.imag for t in ordered))
    if not cmath.isfinite(value):
        raise NonConvergence("spiral sum is not finite")
    edge = sum(abs(terms[n]) + abs(terms[-n]) for n in range(w - k + 1, w + 1))
    tail = edge / abs(value) if value != 0 else (0.0 if edge == 0 else math.inf)
    if tail > SPIRAL_TAIL_RTOL:
        raise TailError(f"spiral sum tail {tail:.2e} exceeds {SPIRAL_TAIL_RTOL} at window {w}")
    return SpiralSum(value, w, tail, {"window": w, "level": spiral.level})


def qlaplace_spiral(
    phi: Evaluator,
    spiral: Spiral,
    x: complex,
    window: int | None = None,
    cfg: EvalConfig = DEFAULT,
) -> complex:
    """First-kind q-Laplace transform (of level ``spiral.level``) at x."""
    return spiral_sum(phi, spiral, x, window, cfg).value


QUAD_RTOL = 1e-10
QUAD_MAX_POINTS = 2**16


def qlaplace_contour(
    g: Evaluator,
    base: Base,
    x: complex,
    contour: Contour,
    cfg: EvalConfig = DEFAULT,
) -> complex:
    """Second-kind q-Laplace transform (1/2 pi i) int g(xi) theta_q(x/xi) dxi/xi.

    Trapezoid rule on |xi| = radius; the point count doubles from
    ``contour.points`` until two successive values agree to 1e-10.
    """
    x = complex(x)
    if x == 0:
        raise DomainError("q-Laplace transform is undefined at x = 0")
    r = contour.radius

    def f(j: int, M: int) -> complex:
        xi = r * cmath.exp(2j * math.pi * j / M)
        return g(xi) * theta(base, x / xi, cfg)

    M = contour.points
    vals = [f(j, M) for j in range(M)]
    prev = _mean(vals)
    while M < QUAD_MAX_POINTS:
        vals = vals + [f(2 * j + 1, 2 * M) for j in range(M)]
        M *= 2
        cur = _mean(vals)
        if abs(cur - prev) <= QUAD_RTOL * abs(cur) or (abs(cur) == 0 and abs(prev) == 0):
            return cur
        prev = cur
    raise QuadratureError(f"contour integral not settled at {QUAD_MAX_POINTS} points")


def _mean(vals: list[complex]) -> complex:
    n = len(vals)
    return complex(math.fsum(v.real for v in vals) / n, math.fsum(v.imag for v in vals) / n)


def balanced_radius(base: Base, x: complex, degree: int) -> float:
    """Contour radius |x| |q|^{(d-1)/2}, which keeps the integrand of a
    degree-d Borel polynomial within ~|q|^{-d^2/8} of the result."""
    return abs(complex(x)) * abs(base.q) ** ((degree - 1) / 2)


# ---------------------------------------------------- q-Airy Borel kernel


def qairy_kernel(base: Base, cfg: EvalConfig = DEFAULT) -> Evaluator:
    """g(tau) = 1 / ((-q^2 tau; q)_inf (q^2 tau; q)_inf)."""
    q2 = base.q**2

    def g(tau: complex) -> complex:
        return 1 / (qpochhammer_infinite(-q2 * tau, base, cfg) * qpochhammer_infinite(q2 * tau, base, cfg))

    return g


def default_kernel_radius(base: Base) -> float:
    return min(1.0, 0.5 * abs(base.q) ** -2)


def _residue_simple_pole(k: int, base: Base, cfg: EvalConfig) -> complex:
    """Res{ 1/((tau/mu; q)_inf tau) ; tau = mu q^{-k} } (independent of mu)."""
    q = base.q
    return (-1) ** (k + 1) * q ** (k * (k + 1) // 2) / (qpochhammer_finite(q, base, k) * qq_inf(base, cfg))


def _inv_poch_shifted(mu: complex, k: int, base: Base, cfg: EvalConfig) -> complex:
    """1/(mu q^{-k}; q)_inf through the finite form (mu not in q^Z)."""
    q = base.q
    return (-mu) ** (-k) * q ** (k * (k + 1) // 2) / (
        qpochhammer_infinite(mu, base, cfg) * qpochhammer_finite(q / mu, base, k)
    )


def residue_laplace_qairy(
    base: Base, t: complex, kmax: int | None = None, cfg: EvalConfig = DEFAULT
) -> complex:
    """Minus the sum of residues of g(tau) theta_q(t/tau)/tau at tau = +-q^{-2-k}.

    Residues use the closed forms for simple poles of 1/(tau/mu;q)_inf and
    for 1/(mu q^{-k};q)_inf.  Without ``kmax`` terms are added until three
    in a row fall below 1e-16 of the running sum.
    """
    t = complex(t)
    if t == 0:
        raise DomainError("t must be nonzero")
    q = base.q
    total = 0j
    small = 0
    k = 0
    while True:
        res = _residue_simple_pole(k, base, cfg)
        # pole of 1/(q^2 tau; q)_inf at tau = q^{-2-k}; cofactor 1/(-q^2 tau; q)_inf there
        plus = res * _inv_poch_shifted(-1.0, k, base, cfg) * theta(base, t * q ** (2 + k), cfg)
        # pole of 1/(-q^2 tau; q)_inf at tau = -q^{-2-k}; cofactor 1/(q^2 tau; q)_inf there
        minus = res * _inv_poch_shifted(-1.0, k, base, cfg) * theta(base, -t * q ** (2 + k), cfg)
        term = -(plus + minus)
        total += term
        k += 1
        if kmax is not None:
            if k > kmax:
                return total
            continue
        if abs(term) <= 1e-16 * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
        if k > cfg.max_terms:
            raise NonConvergence("residue sum did not settle")


# ------------------------------------------------------------ resummation


def _check_x(x: complex) -> complex:
    x = complex(x)
    if x == 0:
        raise DomainError("resummation is undefined at x = 0")
    return x


def resum_2f0(
    base: Base,
    lam: complex,
    x: complex,
    window: int | None = None,
    cfg: EvalConfig = DEFAULT,
) -> complex:
    """Resummation 2f0(0,0;-;q,lam,-x/q) of the divergent 2phi0(0,0;-;q,-x/q).

    The Borel transform is e_q(xi/q); it is evaluated through its product
    form so it is defined at every spiral point, not just |xi| < |q|.
    """
    x = _check_x(x)
    lam = complex(lam)
    spiral = Spiral(lam, 1, base)
    if spiral_index(lam, 1.0, base, rtol=1e-8) is not None:
        raise DomainError(f"lambda={lam} lies on q^Z; the spiral would hit poles of e_q(xi/q)")
    q = base.q
    return qlaplace_spiral(lambda xi: eq_small(base, xi / q, cfg), spiral, x, window, cfg)


def resum_rf0(
    r: int,
    base: Base,
    lam: complex,
    x: complex,
    window: int | None = None,
    cfg: EvalConfig = DEFAULT,
) -> complex:
    """Level-(r-1) resummation of rphi0(0,...,0;-;q,x).

    The level-(r-1) Borel transform of rphi0(x) is e_q((-1)^{r-1} xi); the
    sign matters for even r.
    """
    if r < 2:
        raise DomainError("r must be >= 2")
    x = _check_x(x)
    lam = complex(lam)
    eps = (-1) ** (r - 1)
    spiral = Spiral(lam, r - 1, base)
    if spiral_index(eps * lam, 1.0, base, rtol=1e-8) is not None:
        raise DomainError(f"lambda={lam} lies on {eps}q^Z; the spiral would hit poles of the Borel transform")
    return qlaplace_spiral(lambda xi: eq_small(base, eps * xi, cfg), spiral, x, window, cfg)


def rf0_coefficients(r: int, base: Base, order: int) -> list[complex]:
    """Coefficients of rphi0(0,...,0;-;q,x)."""
    q = base.q
    out = []
    c = 1 + 0j
    for n in range(order + 1):
        out.append(c)
        # ratio a_{n+1}/a_n = (-q^n)^{1-r} / (1 - q^{n+1})
        c = c * (-(q**n)) ** (1 - r) / (1 - q ** (n + 1))
    return out
