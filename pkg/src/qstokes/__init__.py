"""Numerical toolkit for q-Stokes phenomena: q-special functions, q-Borel and
q-Laplace resummation, and verified connection formulas."""

from .errors import (
    ConsistencyError,
    ConvergenceRadiusError,
    DivergentSeriesError,
    DomainError,
    NonConvergence,
    PoleError,
    QStokesError,
    QuadratureError,
    SpiralPoleError,
    TailError,
    ZeroProximityError,
)
from .qcore import Base, EvalConfig, HyperSpec, phi, qpoch_inf, theta
from .qconnect import SolutionId, audit_normalization, eval_solution, verify_identity
from .qresum import resum_2f0, resum_rf0
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "Base",
    "ConsistencyError",
    "ConvergenceRadiusError",
    "DivergentSeriesError",
    "DomainError",
    "EvalConfig",
    "HyperSpec",
    "NonConvergence",
    "PoleError",
    "QStokesError",
    "QuadratureError",
    "SolutionId",
    "SpiralPoleError",
    "TailError",
    "VerificationReport",
    "ZeroProximityError",
    "audit_normalization",
    "eval_solution",
    "phi",
    "qpoch_inf",
    "resum_2f0",
    "resum_rf0",
    "theta",
    "verify_identity",
]
