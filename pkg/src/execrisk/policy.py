"""Feedback trading-rate rules.

Every rule here is affine in the holdings, ``v(t, y) = slope(t) * y + intercept(t)``,
which is what lets the simulation kernels take precomputed coefficient
arrays instead of calling back into Python.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .params import DerivedParams, ModelParams, ParameterError, derive


class PolicyKind(str, enum.Enum):
    PENALIZED_OPTIMAL = "penalized"
    FUEL_LIMIT_OPTIMAL = "fuel_limit"
    ADAPTIVE_VWAP = "adaptive_vwap"
    DETERMINISTIC_VWAP = "deterministic_vwap"


class HorizonError(ValueError):
    """A feedback rule was evaluated where it is singular or undefined."""


def _tau(p: ModelParams, t, strict: bool) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if strict and np.any(t >= p.horizon):
        raise HorizonError(f"rate requires t < T={p.horizon!r}")
    if np.any(t > p.horizon):
        raise HorizonError(f"t exceeds the horizon T={p.horizon!r}")
    return p.horizon - t


def _require_finite(p: ModelParams, what: str) -> float:
    if p.fuel_limit:
        raise ParameterError(f"{what} requires a finite terminal_penalty")
    return derive(p).alpha  # type: ignore[return-value]


def _penalized_coefficients(p: ModelParams, tau: np.ndarray, B: float, phi0: float):
    alpha = _require_finite(p, "penalized rate")
    kappa = p.temporary_impact
    mu = p.drift
    s = tau + alpha
    slope = 1.0 / s
    intercept = (
        -(mu + B) / (4.0 * kappa) * (s - alpha * alpha / s)
        + B * tau / (2.0 * kappa)
        + alpha / (2.0 * kappa) * (B * tau / s - kappa * phi0 * phi0 / s * np.log(s / alpha))
    )
    return slope, intercept


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def rate_penalized(p: ModelParams, t, y):
    """Optimal scheduled rate for a finite terminal penalty.

    Four-term closed form in ``tau = T - t`` and ``s = tau + alpha``. Signed:
    a negative value is a buy.
    """
    tau = _tau(p, t, strict=True)
    d = derive(p)
    slope, intercept = _penalized_coefficients(p, tau, d.risk_drift, p.exec_risk_strategy)
    return _out(slope * np.asarray(y, dtype=float) + intercept)


def rate_fuel_limit(p: ModelParams, t, y):
    """Infinite-penalty optimum ``y/(T-t) - (mu - B)(T-t)/(4 kappa)``; singular at T."""
    tau = _tau(p, t, strict=True)
    d = derive(p)
    return _out(np.asarray(y, dtype=float) / tau - d.modified_drift * tau / (4.0 * p.temporary_impact))


def rate_adaptive_vwap(p: ModelParams, t, y):
    """The penalized optimum with the execution-risk terms switched off.

    Bounded on the closed interval; at ``t = T`` it equals ``y/alpha``.
    """
    tau = _tau(p, t, strict=False)
    slope, intercept = _penalized_coefficients(p, tau, 0.0, 0.0)
    return _out(slope * np.asarray(y, dtype=float) + intercept)


def rate_deterministic_vwap(p: ModelParams, t=0.0):
    t = np.asarray(t, dtype=float)
    return _out(np.full(t.shape, p.initial_shares / p.horizon))


def expected_holdings_fuel_limit(p: ModelParams, t):
    """Mean of the optimal holdings under the fuel limit: ``(Y/T + (mu-B) t/(4 kappa)) (T-t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > p.horizon):
        raise HorizonError("t must lie in [0, T]")
    d = derive(p)
    return _out(
        (p.initial_shares / p.horizon + d.modified_drift * t / (4.0 * p.temporary_impact)) * (p.horizon - t)
    )


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    params: ModelParams
    derived: DerivedParams = field(init=False, compare=False)

    def __post_init__(self) -> None:
        kind = PolicyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is PolicyKind.FUEL_LIMIT_OPTIMAL and not self.params.fuel_limit:
            raise ParameterError("fuel_limit policy requires terminal_penalty = inf")
        if kind in (PolicyKind.PENALIZED_OPTIMAL, PolicyKind.ADAPTIVE_VWAP) and self.params.fuel_limit:
            raise ParameterError(f"{kind.value} policy requires a finite terminal_penalty")
        object.__setattr__(self, "derived", derive(self.params))

    @classmethod
    def from_name(cls, name: str, params: ModelParams) -> "Policy":
        try:
            kind = PolicyKind(name.strip().lower())
        except ValueError:
            choices = ", ".join(k.value for k in PolicyKind)
            raise ParameterError(f"unknown policy {name!r}; choose from {choices}") from None
        if kind is PolicyKind.FUEL_LIMIT_OPTIMAL and not params.fuel_limit:
            params = params.replace(terminal_penalty=float("inf"))
        return cls(kind, params)

    def rate(self, t, y):
        if self.kind is PolicyKind.PENALIZED_OPTIMAL:
            return rate_penalized(self.params, t, y)
        if self.kind is PolicyKind.FUEL_LIMIT_OPTIMAL:
            return rate_fuel_limit(self.params, t, y)
        if self.kind is PolicyKind.ADAPTIVE_VWAP:
            return rate_adaptive_vwap(self.params, t, y)
        t = np.asarray(t, dtype=float)
        return _out(np.broadcast_to(rate_deterministic_vwap(self.params, t), np.broadcast(t, y).shape).copy())

    def coefficients(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(slope, intercept)`` arrays with ``rate = slope * y + intercept``."""
        p = self.params
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind is PolicyKind.PENALIZED_OPTIMAL:
            tau = _tau(p, t, strict=True)
            return _penalized_coefficients(p, tau, self.derived.risk_drift, p.exec_risk_strategy)
        if self.kind is PolicyKind.ADAPTIVE_VWAP:
            tau = _tau(p, t, strict=False)
            return _penalized_coefficients(p, tau, 0.0, 0.0)
        if self.kind is PolicyKind.FUEL_LIMIT_OPTIMAL:
            tau = _tau(p, t, strict=True)
            return 1.0 / tau, -self.derived.modified_drift * tau / (4.0 * p.temporary_impact)
        return np.zeros_like(t), np.full_like(t, p.initial_shares / p.horizon)

    def terminal_coefficients(self) -> tuple[float, float] | None:
        """Coefficients at ``t = T``, or None when the rule is singular there."""
        p = self.params
        if self.kind is PolicyKind.FUEL_LIMIT_OPTIMAL:
            return None
        if self.kind is PolicyKind.DETERMINISTIC_VWAP:
            return 0.0, p.initial_shares / p.horizon
        # At tau = 0 every intercept term vanishes and the slope is 1/alpha.
        return 1.0 / self.derived.alpha, 0.0  # type: ignore[operator]

    def descriptor(self) -> dict:
        return {"kind": self.kind.value, "params": self.params.to_dict()}
