"""Verification reports and their JSON wire format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any


def cpair(z: complex | None) -> list[float] | None:
    if z is None:
        return None
    z = complex(z)
    return [z.real, z.imag]


def from_cpair(v: Any) -> complex | None:
    if v is None:
        return None
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


@dataclass(frozen=True)
class VerificationReport:
    identity_id: str
    q: complex
    x: complex | None
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    tol: float
    passed: bool
    lam: complex | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "q": cpair(self.q),
            "lambda": cpair(self.lam),
            "x": cpair(self.x),
            "lhs": cpair(self.lhs),
            "rhs": cpair(self.rhs),
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "tol": self.tol,
            "pass": self.passed,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            identity_id=d["identity_id"],
            q=from_cpair(d["q"]),
            x=from_cpair(d.get("x")),
            lhs=from_cpair(d["lhs"]),
            rhs=from_cpair(d["rhs"]),
            abs_err=float(d["abs_err"]),
            rel_err=float(d["rel_err"]),
            tol=float(d["tol"]),
            passed=bool(d["pass"]),
            lam=from_cpair(d.get("lambda")),
            metadata=dict(d.get("metadata") or {}),
        )


def make_report(
    identity_id: str,
    q: complex,
    x: complex | None,
    lhs: complex,
    rhs: complex,
    tol: float,
    lam: complex | None = None,
    scale: float | None = None,
    metadata: dict | None = None,
) -> VerificationReport:
    """Build a report; relative error is taken against ``scale`` when given,
    otherwise against ``max(|lhs|, |rhs|)``."""
    lhs, rhs = complex(lhs), complex(rhs)
    abs_err = abs(lhs - rhs)
    denom = scale if scale is not None else max(abs(lhs), abs(rhs))
    rel_err = abs_err / denom if denom > 0 else 0.0
    tiny = abs(lhs) < tol and abs(rhs) < tol and scale is None
    passed = rel_err <= tol or (tiny and abs_err <= tol)
    return VerificationReport(
        identity_id=identity_id,
        q=complex(q),
        x=None if x is None else complex(x),
        lhs=lhs,
        rhs=rhs,
        abs_err=abs_err,
        rel_err=rel_err,
        tol=tol,
        passed=bool(passed),
        lam=None if lam is None else complex(lam),
        metadata=dict(metadata or {}),
    )
