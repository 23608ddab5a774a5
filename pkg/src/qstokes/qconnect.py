"""Local solutions of the Ramanujan and q-Airy equations, connection
formulas, identity verifiers and the normalization audit.

Every verifier computes its two sides along separate code paths that share
nothing beyond the primitives in :mod:`qstokes.qcore`.  The resummed side of
a connection formula never reuses the theta/phi decomposition it is being
compared with.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ConsistencyError, DomainError, ZeroProximityError
from .qcore import (
    DEFAULT,
    Base,
    EvalConfig,
    Eq_big,
    HyperSpec,
    Eq_series,
    eq_series,
    eq_small,
    log_character,
    phi,
    qairy_Aiq,
    qpoch_inf,
    qpochhammer_finite,
    qq_inf,
    ramanujan_Aq,
    spiral_distance,
    spiral_index,
    sum_series,
    theta,
)
from .qformal import QDiffOperator
from .qresum import (
    Contour,
    default_kernel_radius,
    qairy_kernel,
    qlaplace_contour,
    residue_laplace_qairy,
    resum_2f0,
    resum_rf0,
)
from .report import VerificationReport, make_report

# excluded points closer than this (relative) raise DomainError
EXCLUDE_RTOL = 1e-10


class SolutionId(str, Enum):
    u1 = "u1"
    u2_resummed = "u2_resummed"
    v1 = "v1"
    v2 = "v2"
    Aq = "Aq"
    Aiq = "Aiq"
    Aiq_mirror = "Aiq_mirror"
    eq = "eq"
    Eq = "Eq"


def equation_for(sid: SolutionId, base: Base) -> QDiffOperator:
    """The q-difference operator that the solution is meant to annihilate."""
    sid = SolutionId(sid)
    if sid in (SolutionId.Aiq, SolutionId.Aiq_mirror):
        return QDiffOperator.qairy()
    if sid is SolutionId.eq:
        return QDiffOperator.qexp_small()
    if sid is SolutionId.Eq:
        return QDiffOperator.qexp_big()
    return QDiffOperator.ramanujan(base)


def _nonzero(x: complex, what: str = "x") -> complex:
    x = complex(x)
    if x == 0:
        raise DomainError(f"{what} must be nonzero")
    return x


def _avoid(z: complex, lam: complex, base: Base, label: str) -> None:
    if spiral_index(z, lam, base, EXCLUDE_RTOL) is not None:
        raise DomainError(f"{label}: point {z} lies on the excluded set [{lam}; {base.q}]")


# ------------------------------------------------------- printed formulas


def H1(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """1phi1(0; q; q^2, q^2/x)."""
    b2 = base.power(2)
    return phi(HyperSpec((0,), (base.q,), b2), base.q**2 / x, cfg)


def H2(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """1phi1(0; q^3; q^2, q^3/x)."""
    b2 = base.power(2)
    return phi(HyperSpec((0,), (base.q**3,), b2), base.q**3 / x, cfg)


def v1(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    x = _nonzero(x)
    return theta(base, x, cfg) / theta(base.power(2), x, cfg) * H1(base, x, cfg)


def v2(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    x = _nonzero(x)
    q = base.q
    return q / (q - 1) * theta(base, x / q, cfg) / theta(base.power(2), x / q, cfg) / x * H2(base, x, cfg)


def _qq2(base: Base, cfg: EvalConfig) -> complex:
    """(q, q^2; q^2)_inf."""
    return qpoch_inf((base.q, base.q**2), base.power(2), cfg)


def C11(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    b2 = base.power(2)
    q = base.q
    return theta(b2, q * x, cfg) * theta(b2, x, cfg) / (_qq2(base, cfg) * theta(base, x, cfg))


def C12(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    b2 = base.power(2)
    q = base.q
    return theta(b2, x, cfg) * theta(b2, x / q, cfg) / (_qq2(base, cfg) * theta(base, x / q, cfg))


def C21_section1(base: Base, lam: complex, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    b2, q = base.power(2), base.q
    return (
        qq_inf(base, cfg) * theta(b2, -q * x / lam**2, cfg) * theta(b2, x, cfg)
        / (theta(base, -q / lam, cfg) * theta(base, x / lam, cfg) * theta(base, x, cfg))
    )


def C22_section1(base: Base, lam: complex, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    b2, q = base.power(2), base.q
    return (
        qq_inf(base, cfg) * theta(b2, -x / lam**2, cfg) * theta(b2, x / q, cfg)
        / (theta(base, -1 / lam, cfg) * theta(base, x / lam, cfg) * theta(base, x / q, cfg))
    )


def C21_derived(base: Base, lam: complex, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """Coefficient of v1 in the resummed solution, read off the 2phi0 theorem."""
    b2, q = base.power(2), base.q
    return (
        qq_inf(base, cfg) * theta(b2, -lam**2 / (q * x), cfg) * theta(b2, x, cfg)
        / (theta(base, -lam / q, cfg) * theta(base, lam / x, cfg))
    )


def C22_derived(base: Base, lam: complex, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    b2, q = base.power(2), base.q
    return (
        -(lam / x) * qq_inf(base, cfg) * theta(b2, -lam**2 / x, cfg) * theta(b2, x / q, cfg)
        / (theta(base, -lam / q, cfg) * theta(base, lam / x, cfg))
    )


ROW2_NORMALIZATIONS = {
    "section7_derived": (C21_derived, C22_derived),
    "section1_printed": (C21_section1, C22_section1),
}
RESOLVED_ROW2 = "section7_derived"


def ismail_zhang_terms(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> tuple[complex, complex]:
    q = base.q
    b2 = base.power(2)
    x = _nonzero(x)
    den = qpoch_inf((q,), b2, cfg)
    t1 = qpoch_inf((q * x, q / x), b2, cfg) / den * H1(base, x, cfg)
    t2 = -q * qpoch_inf((q * q * x, 1 / x), b2, cfg) / ((1 - q) * den) * H2(base, x, cfg)
    return t1, t2


def row1_terms(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> tuple[complex, complex]:
    return C11(base, x, cfg) * v1(base, x, cfg), C12(base, x, cfg) * v2(base, x, cfg)


def row1_terms_negated_theta(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> tuple[complex, complex]:
    """Row 1 with every theta argument negated (theta_q(-x) in place of theta_q(x))."""
    q, b2 = base.q, base.power(2)
    c11 = theta(b2, -q * x, cfg) * theta(b2, -x, cfg) / (_qq2(base, cfg) * theta(base, -x, cfg))
    c12 = theta(b2, -x, cfg) * theta(b2, -x / q, cfg) / (_qq2(base, cfg) * theta(base, -x / q, cfg))
    w1 = theta(base, -x, cfg) / theta(b2, -x, cfg) * H1(base, x, cfg)
    w2 = q / (q - 1) * theta(base, -x / q, cfg) / theta(b2, -x / q, cfg) / x * H2(base, x, cfg)
    return c11 * w1, c12 * w2


def row2_terms(
    base: Base, lam: complex, x: complex, normalization: str = RESOLVED_ROW2, cfg: EvalConfig = DEFAULT
) -> tuple[complex, complex]:
    c21, c22 = ROW2_NORMALIZATIONS[normalization]
    return c21(base, lam, x, cfg) * v1(base, x, cfg), c22(base, lam, x, cfg) * v2(base, x, cfg)


def two_f_zero_terms(
    base: Base, lam: complex, x: complex, cfg: EvalConfig = DEFAULT, proof_line: bool = False
) -> tuple[complex, complex]:
    """theta_q(x) times the two terms of the 2phi0 connection theorem.

    ``proof_line`` selects the last displayed line of the proof, which drops
    the lam/x monomial on the second term.
    """
    q, b2 = base.q, base.power(2)
    thx = theta(base, x, cfg)
    den = theta(base, -lam / q, cfg) * theta(base, lam / x, cfg)
    qq = qq_inf(base, cfg)
    t1 = qq * thx * theta(b2, -lam**2 / (q * x), cfg) / den * H1(base, x, cfg)
    t2 = qq / (1 - q) * thx * theta(b2, -lam**2 / x, cfg) / den * H2(base, x, cfg)
    if not proof_line:
        t2 *= lam / x
    return t1, t2


TWO_F_ZERO_FORMS = {
    "section7_theorem": lambda b, l, x, c: two_f_zero_terms(b, l, x, c),
    "section7_proof_line": lambda b, l, x, c: two_f_zero_terms(b, l, x, c, proof_line=True),
    "section1_matrix": lambda b, l, x, c: row2_terms(b, l, x, "section1_printed", c),
}
RESOLVED_TWO_F_ZERO = "section7_theorem"


def u2_resummed(base: Base, lam: complex, x: complex, window: int | None = None, cfg: EvalConfig = DEFAULT) -> complex:
    x = _nonzero(x)
    return theta(base, x, cfg) * resum_2f0(base, lam, x, window, cfg)


def thm31_rhs(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """(q;q)_inf / theta_q(-x) * E_q(-q/x), with E_q summed as a series."""
    x = _nonzero(x)
    return qq_inf(base, cfg) / theta(base, -x, cfg) * Eq_series(base, -base.q / x, cfg)


def lemma32_rhs(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """Even/odd split of e_q(x/q) into two 0phi1 series in base q^2."""
    q, b2 = base.q, base.power(2)
    x = _nonzero(x)
    pre = qq_inf(base, cfg) / theta(base, -x / q, cfg)
    a = phi(HyperSpec((), (q,), b2), q**5 / x**2, cfg)
    b = phi(HyperSpec((), (q**3,), b2), q**7 / x**2, cfg)
    return pre * a - pre * q**2 / ((1 - q) * x) * b


def rsplit_terms(r: int, base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> list[complex]:
    """The r terms of e_q(x) obtained by splitting E_q(-q/x) by residue class mod r.

    Term i carries (-1)^i q^{i(i-1)/2} (q/x)^i / (q;q)_i and a 0phi_{r-1} in
    base q^r with lower parameters q^{i+1}, ..., q^{i+r} minus q^r.
    """
    if r < 1:
        raise DomainError("r must be >= 1")
    q = base.q
    x = _nonzero(x)
    br = base.power(r)
    pre = qq_inf(base, cfg) / theta(base, -x, cfg)
    out = []
    for i in range(r):
        lead = (-1) ** i * q ** (i * (i - 1) // 2) / qpochhammer_finite(q, base, i) * (q / x) ** i
        lower = tuple(q ** (i + l) for l in range(1, r + 1) if i + l != r)
        z = q ** (r * (r - 1 + 2 * i) // 2) * (q / x) ** r
        out.append(pre * lead * phi(HyperSpec((), lower, br), z, cfg))
    return out


def ram_qairy_rhs_terms(base: Base, x: complex, cfg: EvalConfig = DEFAULT) -> tuple[complex, complex]:
    q = base.q
    x = _nonzero(x)
    den = qq_inf(base, cfg) * qpoch_inf((-1,), base, cfg)
    return (
        theta(base, x / q, cfg) * qairy_Aiq(base, -x, cfg) / den,
        theta(base, -x / q, cfg) * qairy_Aiq(base, x, cfg) / den,
    )


def qairy_laplace_closed_form(base: Base, t: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """[theta(q^2 t) 1phi1(0;-q;q,1/t) + theta(-q^2 t) 1phi1(0;-q;q,-1/t)] / (q,-1;q)_inf."""
    q = base.q
    t = _nonzero(t, "t")
    spec = HyperSpec((0,), (-q,), base)
    den = qq_inf(base, cfg) * qpoch_inf((-1,), base, cfg)
    return (theta(base, q * q * t, cfg) * phi(spec, 1 / t, cfg) + theta(base, -q * q * t, cfg) * phi(spec, -1 / t, cfg)) / den


def qairy_prefactor(base: Base, t: complex, cfg: EvalConfig = DEFAULT) -> complex:
    """E(t) = 1/theta_q(-q^2 t)."""
    return 1 / theta(base, -base.q**2 * t, cfg)


def level_r_terms(
    r: int, base: Base, lam: complex, x: complex, reading: str = "corrected", cfg: EvalConfig = DEFAULT
) -> list[complex]:
    """Terms of the closed form for the level-(r-1) resummation of rphi0.

    ``corrected``: derived from the spiral sum of the mod-r split of
    e_q(eps xi), eps = (-1)^{r-1}.  Term i is

        (q;q)_inf / (theta_q(-eps lam) theta_{q^{r-1}}(lam/x))
        * (-1)^i q^{i(i-1)/2} / (q;q)_i * (q/(eps lam))^i
        * theta_{q^{r(r-1)}}(q^{r(r-1)/2 - (r-1)(1+i)} lam^r / x)
        * (r-1)phi(r-1)(0,..,0; b_i; q^r, eps q^{1+i} / x).

    ``printed``: the displayed theorem with theta_{q^{r(r-1)}} applied to the
    parenthesised argument, the elided middle terms interpolated linearly in
    the exponents, and the duplicated q^r dropped from the last parameter list.
    """
    if r < 2:
        raise DomainError("r must be >= 2")
    q = base.q
    s = r - 1
    lam, x = complex(lam), _nonzero(x)
    eps = (-1) ** s
    qq = qq_inf(base, cfg)
    big = base.power(r * s)
    br = base.power(r)
    out = []
    for i in range(r):
        lower = tuple(q ** (i + l) for l in range(1, r + 1) if i + l != r)
        spec = HyperSpec((0,) * s, lower, br)
        p_i = (-1) ** i * q ** (i * (i - 1) // 2) / qpochhammer_finite(q, base, i)
        if reading == "corrected":
            pre = qq / (theta(base, -eps * lam, cfg) * theta(base.power(s), lam / x, cfg))
            th = theta(big, q ** (r * s // 2 - s * (1 + i)) * lam**r / x, cfg)
            val = pre * p_i * (q / (eps * lam)) ** i * th * phi(spec, eps * q ** (1 + i) / x, cfg)
        elif reading == "printed":
            c_i = s * (s - 1) // 2 + i * (r + 1)
            pre = qq / (theta(base, -lam, cfg) * theta(base.power(s), lam / x, cfg))
            th = theta(big, eps * q**c_i * (lam / x) ** r, cfg)
            val = pre * p_i * (q / lam) ** i * th * phi(spec, q**c_i / x, cfg)
        else:
            raise DomainError(f"unknown reading {reading!r}")
        out.append(val)
    return out


RESOLVED_LEVEL_R = "corrected"


# ---------------------------------------------------------------- solutions


def eval_solution(
    sid: SolutionId | str,
    base: Base,
    x: complex,
    lam: complex | None = None,
    cfg: EvalConfig = DEFAULT,
    check: bool = False,
) -> complex:
    """Evaluate one of the named local solutions at x.

    With ``check=True`` the residual of the solution's own equation is
    computed at x and a ConsistencyError is raised above 1e-9 of the
    residual's term scale.
    """
    sid = SolutionId(sid)
    x = complex(x)
    q = base.q
    if sid is SolutionId.u1:
        f = lambda y: phi(HyperSpec((), (0,), base), -q * y, cfg)
    elif sid is SolutionId.Aq:
        f = lambda y: ramanujan_Aq(base, y, cfg)
    elif sid is SolutionId.u2_resummed:
        if lam is None:
            raise DomainError("u2_resummed needs lambda")
        f = lambda y: u2_resummed(base, lam, y, cfg=cfg)
    elif sid is SolutionId.v1:
        f = lambda y: v1(base, y, cfg)
    elif sid is SolutionId.v2:
        f = lambda y: v2(base, y, cfg)
    elif sid is SolutionId.Aiq:
        f = lambda y: qairy_Aiq(base, y, cfg)
    elif sid is SolutionId.Aiq_mirror:
        f = lambda y: log_character(base, _nonzero(y)) * qairy_Aiq(base, -y, cfg)
    elif sid is SolutionId.eq:
        f = lambda y: eq_small(base, y, cfg)
    else:
        f = lambda y: Eq_big(base, y, cfg)
    value = f(x)
    if check:
        op = equation_for(sid, base)
        parts = op.terms_at(f, base, x)
        scale = max(abs(p) for p in parts)
        res = abs(sum(parts))
        if res > 1e-9 * scale:
            raise ConsistencyError(f"{sid.value} residual {res:.3e} exceeds 1e-9 of scale {scale:.3e} at x={x}")
    return value


def residual(op: QDiffOperator, u: Callable[[complex], complex], base: Base, x: complex) -> complex:
    """sum c x^m u(q^l x)."""
    return op(u, base, x)


def residual_scale(op: QDiffOperator, u: Callable[[complex], complex], base: Base, x: complex) -> float:
    return max(abs(p) for p in op.terms_at(u, base, x))


# ---------------------------------------------------------------- verifiers

IDENTITIES = (
    "qexp_pair",
    "qexp_inverse_base",
    "eq_vs_Eq",
    "eq_alternate",
    "eq_rsplit",
    "two_f_zero",
    "main_matrix",
    "ismail_zhang",
    "ram_qairy",
    "ram_qairy_pipeline",
    "level_r",
)

DEFAULT_TOL = {
    "qexp_pair": 1e-12,
    "qexp_inverse_base": 1e-10,
    "eq_vs_Eq": 1e-9,
    "eq_alternate": 1e-9,
    "eq_rsplit": 1e-9,
    "two_f_zero": 1e-8,
    "main_matrix": 1e-9,
    "ismail_zhang": 1e-9,
    "ram_qairy": 1e-9,
    "ram_qairy_pipeline": 1e-8,
    "level_r": 1e-8,
}


def _e_qinv_series(base: Base, x: complex, cfg: EvalConfig) -> complex:
    """e_{1/q}(x) = sum x^n / (1/q; 1/q)_n, each Pochhammer a finite product."""
    p = 1 / base.q

    def terms():
        t = 1 + 0j
        pk = p
        while True:
            yield t
            t = t * x / (1 - pk)
            pk *= p

    return sum_series(terms(), cfg)


def verify_identity(
    identity_id: str,
    base: Base,
    x: complex,
    lam: complex | None = None,
    r: int | None = None,
    row: int = 1,
    normalization: str | None = None,
    tol: float | None = None,
    cfg: EvalConfig = DEFAULT,
) -> VerificationReport:
    """Check one identity at one point; returns a VerificationReport.

    Raises DomainError when x (or lambda) sits on the identity's excluded set.
    """
    if identity_id not in IDENTITIES:
        raise DomainError(f"unknown identity {identity_id!r}")
    x = _nonzero(x)
    q = base.q
    tol = DEFAULT_TOL[identity_id] if tol is None else tol
    meta: dict = {}
    scale = None
    rep_id = identity_id

    def need_lam() -> complex:
        if lam is None:
            raise DomainError(f"{identity_id} needs lambda")
        return complex(lam)

    if identity_id == "qexp_pair":
        if abs(x) >= 1:
            raise DomainError("qexp_pair uses the e_q series, which needs |x| < 1")
        lhs = eq_series(base, x, cfg) * Eq_big(base, -x, cfg)
        rhs = 1.0
    elif identity_id == "qexp_inverse_base":
        lhs = _e_qinv_series(base, x, cfg)
        rhs = Eq_big(base, -q * x, cfg)
    elif identity_id == "eq_vs_Eq":
        _avoid(x, 1.0, base, identity_id)
        lhs = eq_small(base, x, cfg)
        rhs = thm31_rhs(base, x, cfg)
    elif identity_id == "eq_alternate":
        _avoid(x, 1.0, base, identity_id)
        lhs = eq_small(base, x / q, cfg)
        rhs = lemma32_rhs(base, x, cfg)
    elif identity_id == "eq_rsplit":
        if r is None:
            raise DomainError("eq_rsplit needs r")
        _avoid(x, 1.0, base, identity_id)
        rep_id = f"eq_rsplit({r})"
        lhs = eq_small(base, x, cfg)
        rhs = sum(rsplit_terms(r, base, x, cfg))
        meta["r"] = r
    elif identity_id == "two_f_zero":
        lam = need_lam()
        _avoid(x, -lam, base, identity_id)
        _avoid(lam, 1.0, base, "lambda")
        norm = normalization or RESOLVED_TWO_F_ZERO
        lhs = u2_resummed(base, lam, x, cfg=cfg)
        rhs = sum(TWO_F_ZERO_FORMS[norm](base, lam, x, cfg))
        meta["normalization"] = norm
    elif identity_id == "main_matrix":
        _avoid(x, -1.0, base, identity_id)
        rep_id = f"main_matrix(row{row})"
        meta["row"] = row
        if row == 1:
            lhs = ramanujan_Aq(base, x, cfg)
            rhs = sum(row1_terms(base, x, cfg))
        elif row == 2:
            lam = need_lam()
            _avoid(x, -lam, base, identity_id)
            _avoid(lam, 1.0, base, "lambda")
            norm = normalization or RESOLVED_ROW2
            lhs = u2_resummed(base, lam, x, cfg=cfg)
            rhs = sum(row2_terms(base, lam, x, norm, cfg))
            meta["normalization"] = norm
        else:
            raise DomainError("row must be 1 or 2")
    elif identity_id == "ismail_zhang":
        lhs = ramanujan_Aq(base, x, cfg)
        rhs = sum(ismail_zhang_terms(base, x, cfg))
    elif identity_id == "ram_qairy":
        lhs = ramanujan_Aq(base.power(2), -(q**3) / x**2, cfg)
        rhs = sum(ram_qairy_rhs_terms(base, x, cfg))
        meta["theta_reading"] = "theta_q"
    elif identity_id == "ram_qairy_pipeline":
        t = 1 / x
        pre = qairy_prefactor(base, t, cfg)
        radius = default_kernel_radius(base)
        lhs = pre * qlaplace_contour(qairy_kernel(base, cfg), base, t, Contour(radius), cfg)
        rhs = pre * sum(ram_qairy_rhs_terms(base, x, cfg))
        meta["radius"] = radius
    else:  # level_r
        lam = need_lam()
        if r is None:
            raise DomainError("level_r needs r")
        s = r - 1
        _avoid(x, -lam, base.power(s), identity_id)
        reading = normalization or RESOLVED_LEVEL_R
        rep_id = f"level_r({r})"
        lhs = resum_rf0(r, base, lam, x, cfg=cfg)
        rhs = sum(level_r_terms(r, base, lam, x, reading, cfg))
        meta.update(r=r, normalization=reading)
    return make_report(rep_id, q, x, lhs, rhs, tol, lam=lam, scale=scale, metadata=meta)


def qairy_pipeline_reports(
    base: Base, t: complex, tol: float = 1e-8, cfg: EvalConfig = DEFAULT
) -> list[VerificationReport]:
    """Contour quadrature, residue sum, closed form and the series A_{q^2}(-q^3 t^2)."""
    t = _nonzero(t, "t")
    q = base.q
    radius = default_kernel_radius(base)
    contour = qlaplace_contour(qairy_kernel(base, cfg), base, t, Contour(radius), cfg)
    residues = residue_laplace_qairy(base, t, cfg=cfg)
    closed = qairy_laplace_closed_form(base, t, cfg)
    series = ramanujan_Aq(base.power(2), -(q**3) * t * t, cfg)
    meta = {"radius": radius}
    return [
        make_report("qairy_contour_vs_residue", q, t, contour, residues, tol, metadata=meta),
        make_report("qairy_residue_vs_closed", q, t, residues, closed, tol, metadata=meta),
        make_report("qairy_closed_vs_series", q, t, closed, series, tol, metadata=meta),
    ]


def ellipticity_check(
    coefficient: str, base: Base, x: complex, tol: float = 1e-10, cfg: EvalConfig = DEFAULT
) -> VerificationReport:
    """C(q^2 x) == C(x) for C in {C11, C12}."""
    fn = {"C11": C11, "C12": C12}.get(coefficient)
    if fn is None:
        raise DomainError(f"unknown coefficient {coefficient!r}")
    x = _nonzero(x)
    q2 = base.q**2
    for z in (x, q2 * x):
        if spiral_distance(z, -1.0, base) < 1e-8:
            raise ZeroProximityError(f"{coefficient}: {z} is on a zero of theta_q")
    return make_report(f"ellipticity({coefficient})", base.q, x, fn(base, q2 * x, cfg), fn(base, x, cfg), tol)


# -------------------------------------------------------------------- audit

AUDIT_RTOL = 1e-8
MONOMIAL_K = range(-2, 3)
MONOMIAL_J = range(-3, 4)


@dataclass
class CandidateOutcome:
    name: str
    printed_match: bool
    printed_max_rel_err: float
    correction: list | None  # per term: [sign, k, j] meaning sign * (lam/x)^k * q^j
    corrected_max_rel_err: float | None
    residual_profile: list[float]

    @property
    def matched(self) -> bool:
        return self.printed_match or self.correction is not None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "printed_match": self.printed_match,
            "printed_max_rel_err": self.printed_max_rel_err,
            "correction": self.correction,
            "corrected_max_rel_err": self.corrected_max_rel_err,
            "residual_profile": self.residual_profile,
        }


@dataclass
class AuditReport:
    identity_id: str
    q: complex
    lam: complex | None
    r: int | None
    samples: list[complex]
    candidates: list[CandidateOutcome]
    resolved: list[list[str]]  # groups of matching candidates that give the same function
    tol: float
    metadata: dict = field(default_factory=dict)

    @property
    def unique(self) -> bool:
        return len(self.resolved) == 1

    @property
    def resolved_name(self) -> str | None:
        return self.resolved[0][0] if self.unique else None

    @property
    def best(self) -> CandidateOutcome:
        return min(self.candidates, key=lambda c: c.corrected_max_rel_err if c.correction else c.printed_max_rel_err)

    def candidate(self, name: str) -> CandidateOutcome:
        return next(c for c in self.candidates if c.name == name)

    def to_dict(self) -> dict:
        from .report import cpair

        return {
            "identity_id": self.identity_id,
            "q": cpair(self.q),
            "lambda": cpair(self.lam),
            "r": self.r,
            "samples": [cpair(z) for z in self.samples],
            "tol": self.tol,
            "candidates": [c.to_dict() for c in self.candidates],
            "resolved": self.resolved,
            "unique": self.unique,
            "resolved_name": self.resolved_name,
            "best": self.best.name,
            "metadata": self.metadata,
        }


def _audit_setup(identity_id: str, base: Base, lam, r, cfg):
    """(lhs(x), {name: terms(x)}, excluded-set checks) for each auditable identity."""
    if identity_id == "two_f_zero":
        lhs = lambda x: u2_resummed(base, lam, x, cfg=cfg)
        cands = {k: (lambda x, f=f: list(f(base, lam, x, cfg))) for k, f in TWO_F_ZERO_FORMS.items()}
        avoid = [(-lam, base)]
    elif identity_id == "main_matrix":
        lhs = lambda x: u2_resummed(base, lam, x, cfg=cfg)
        cands = {k: (lambda x, k=k: list(row2_terms(base, lam, x, k, cfg))) for k in ROW2_NORMALIZATIONS}
        avoid = [(-lam, base), (-1.0, base)]
    elif identity_id == "main_matrix_row1":
        lhs = lambda x: ramanujan_Aq(base, x, cfg)
        cands = {
            "printed": lambda x: list(row1_terms(base, x, cfg)),
            "theta_argument_negated": lambda x: list(row1_terms_negated_theta(base, x, cfg)),
        }
        avoid = [(-1.0, base), (1.0, base)]
    elif identity_id == "level_r":
        if r is None:
            raise DomainError("level_r audit needs r")
        lhs = lambda x: resum_rf0(r, base, lam, x, cfg=cfg)
        cands = {k: (lambda x, k=k: level_r_terms(r, base, lam, x, k, cfg)) for k in ("printed", "corrected")}
        s = r - 1
        avoid = [(-lam, base.power(s)), (lam, base.power(r * s)), (-lam, base.power(r * s))]
    elif identity_id == "qexp_pair":
        lhs = lambda x: eq_small(base, x, cfg)
        cands = {"baseline": lambda x: [1 / Eq_big(base, -x, cfg)]}
        avoid = [(1.0, base)]
    else:
        raise DomainError(f"identity {identity_id!r} has no audit candidates")
    return lhs, cands, avoid


def excluded_sets(identity_id: str, base: Base, lam: complex | None = None, r: int | None = None) -> list:
    """Spirals (center, base) that sample points for an identity must avoid."""
    if identity_id in ("eq_vs_Eq", "eq_alternate", "eq_rsplit", "qexp_pair", "qexp_inverse_base"):
        return [(1.0, base)]
    if identity_id in ("main_matrix", "main_matrix_row1", "ismail_zhang"):
        out = [(-1.0, base), (1.0, base)]
        if lam is not None:
            out.append((-complex(lam), base))
        return out
    if identity_id == "two_f_zero":
        return [(-complex(lam), base), (-1.0, base)]
    if identity_id == "level_r":
        s = (r or 2) - 1
        return [(-complex(lam), base.power(s)), (-1.0, base)]
    if identity_id in ("ram_qairy", "ram_qairy_pipeline"):
        return [(1.0, base), (-1.0, base)]
    return []


def sample_points(
    base: Base,
    n: int,
    seed: int = 0,
    avoid=(),
    rmin: float = 0.2,
    rmax: float = 5.0,
    margin: float = 1e-3,
) -> list[complex]:
    """Seeded log-uniform points in an annulus, kept ``margin`` away from each spiral in ``avoid``."""
    rng = np.random.default_rng(seed)
    pts: list[complex] = []
    while len(pts) < n:
        rad = float(np.exp(rng.uniform(np.log(rmin), np.log(rmax))))
        ang = float(rng.uniform(-np.pi, np.pi))
        z = complex(rad * np.cos(ang), rad * np.sin(ang))
        if all(spiral_distance(z, c, b) > margin for c, b in avoid):
            pts.append(z)
    return pts


def default_audit_sample(base: Base, avoid, n: int = 8, seed: int = 0) -> list[complex]:
    return sample_points(base, n, seed, avoid, rmin=0.3, rmax=3.0)


def _max_rel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.abs(a), np.abs(b))


def _monomial_for(alpha: complex, q: complex):
    best = None
    for sign in (1, -1):
        for j in MONOMIAL_J:
            target = sign * q**j
            err = abs(alpha - target) / abs(target)
            if best is None or err < best[0]:
                best = (err, sign, j)
    return best


def _search_correction(L: np.ndarray, T: np.ndarray, mono: np.ndarray, q: complex, tol: float):
    """Find per-term sign*(lam/x)^k*q^j making sum of corrected terms equal L."""
    nterm = T.shape[1]
    found = []
    for ks in itertools.product(MONOMIAL_K, repeat=nterm):
        A = T * np.stack([mono**k for k in ks], axis=1)
        alpha, *_ = np.linalg.lstsq(A, L, rcond=None)
        if np.max(np.abs(A @ alpha - L) / np.abs(L)) > tol:
            continue
        corr = []
        for a in alpha:
            err, sign, j = _monomial_for(complex(a), q)
            if err > 1e-6:
                break
            corr.append((sign, j))
        else:
            exact = np.array([s * q**j for s, j in corr])
            rel = float(np.max(np.abs(A @ exact - L) / np.abs(L)))
            if rel <= tol:
                cost = sum(abs(k) for k in ks) + sum(abs(j) + (s < 0) for s, j in corr)
                found.append((cost, [[s, k, j] for (s, j), k in zip(corr, ks)], rel, A @ exact))
    if not found:
        return None
    return min(found, key=lambda f: f[0])


def audit_normalization(
    identity_id: str,
    base: Base,
    lam: complex | None = None,
    sample: list[complex] | None = None,
    r: int | None = None,
    perturb: dict | None = None,
    tol: float = AUDIT_RTOL,
    seed: int = 0,
    cfg: EvalConfig = DEFAULT,
) -> AuditReport:
    """Compare the resummation ground truth with each printed candidate form.

    Each candidate is first checked as printed.  If it fails, every
    per-term correction sign * (lam/x)^k * q^j with |k| <= 2, |j| <= 3 is
    tried (k by enumeration, the constant by least squares followed by
    snapping to sign * q^j).  ``perturb`` maps ``(candidate, term_index)`` to a
    factor and is used to self-test the search.  Matching candidates whose
    corrected values coincide are grouped; a unique group is the resolved
    normalization.
    """
    lam_c = complex(lam) if lam is not None else None
    if identity_id in ("two_f_zero", "main_matrix", "level_r") and lam_c is None:
        raise DomainError(f"{identity_id} audit needs lambda")
    lhs_fn, cands, avoid = _audit_setup(identity_id, base, lam_c, r, cfg)
    if sample is None:
        sample = default_audit_sample(base, avoid, seed=seed)
    if len(sample) < 8:
        raise DomainError("audit needs at least 8 sample points")
    xs = np.array(sample, dtype=complex)
    L = np.array([lhs_fn(x) for x in sample], dtype=complex)
    mono = (lam_c if lam_c is not None else 1.0) / xs
    q = base.q
    outcomes = []
    matched_values = []
    for name, fn in cands.items():
        T = np.array([fn(x) for x in sample], dtype=complex)
        if perturb:
            for (cname, i), factor in perturb.items():
                if cname == name:
                    T[:, i] *= factor
        printed = _max_rel(L, T.sum(axis=1))
        pmatch = bool(np.max(printed) <= tol)
        corr, crel = None, None
        if pmatch:
            matched_values.append((name, T.sum(axis=1)))
        else:
            hit = _search_correction(L, T, mono, q, tol)
            if hit is not None:
                _, corr, crel, vals = hit
                matched_values.append((name, vals))
        outcomes.append(
            CandidateOutcome(
                name=name,
                printed_match=pmatch,
                printed_max_rel_err=float(np.max(printed)),
                correction=corr,
                corrected_max_rel_err=crel,
                residual_profile=[float(v) for v in printed],
            )
        )
    groups: list[tuple[list[str], np.ndarray]] = []
    for name, vals in matched_values:
        for members, ref in groups:
            if np.max(_max_rel(ref, vals)) <= 1e-10:
                members.append(name)
                break
        else:
            groups.append(([name], vals))
    return AuditReport(
        identity_id=identity_id,
        q=q,
        lam=lam_c,
        r=r,
        samples=list(sample),
        candidates=outcomes,
        resolved=[m for m, _ in groups],
        tol=tol,
        metadata={"monomial_k": [min(MONOMIAL_K), max(MONOMIAL_K)], "monomial_j": [min(MONOMIAL_J), max(MONOMIAL_J)]},
    )
