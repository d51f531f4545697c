"""Optimal liquidation with execution risk in the trading rate."""

__version__ = "0.1.0"

from .params import DerivedParams, ModelParams, ParameterError, build_params, derive, phi0_from_p0
from .policy import HorizonError, Policy, PolicyKind
from .noise import NoisePlan
from .simulate import PathEnsemble, simulate_ensemble
from .objective import RevenueReport, estimate
from .verify import VerificationReport, run_suite

__all__ = [
    "DerivedParams",
    "HorizonError",
    "ModelParams",
    "NoisePlan",
    "ParameterError",
    "PathEnsemble",
    "Policy",
    "PolicyKind",
    "RevenueReport",
    "VerificationReport",
    "build_params",
    "derive",
    "estimate",
    "phi0_from_p0",
    "run_suite",
    "simulate_ensemble",
]
