"""Model constants for the liquidation problem with execution risk.

Units follow the trading-day convention: time in days, prices in currency
per share, holdings in shares.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

INFINITE = math.inf


class ParameterError(ValueError):
    """Raised when a parameter set is missing a field or violates a bound."""


@dataclass(frozen=True)
class ModelParams:
    """Market, impact and execution-risk constants.

    ``terminal_penalty`` may be :data:`INFINITE`, which selects the
    fuel-constrained problem (liquidation enforced at the horizon).
    """

    initial_shares: float
    horizon: float
    initial_price: float
    drift: float
    permanent_impact: float
    temporary_impact: float
    terminal_penalty: float
    market_vol: float = 0.0
    exec_risk_strategy: float = 0.0
    exec_risk_price: float = 0.0
    correlation: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f"{f.name}: expected a real number, got {value!r}")
            object.__setattr__(self, f.name, float(value))
            if math.isnan(getattr(self, f.name)):
                raise ParameterError(f"{f.name}: NaN is not allowed")
        _positive(self, "initial_shares")
        _positive(self, "horizon")
        _positive(self, "initial_price")
        _positive(self, "permanent_impact")
        _positive(self, "temporary_impact")
        _finite(self, "drift")
        for name in ("market_vol", "exec_risk_strategy", "exec_risk_price"):
            _finite(self, name)
            if getattr(self, name) < 0:
                raise ParameterError(f"{name}: must be >= 0, got {getattr(self, name)!r}")
        if not -1.0 <= self.correlation <= 1.0:
            raise ParameterError(f"correlation: must lie in [-1, 1], got {self.correlation!r}")
        lam = self.terminal_penalty
        if lam == -math.inf:
            raise ParameterError("terminal_penalty: must be > permanent_impact/2 or infinite")
        if not math.isinf(lam) and not 2.0 * lam - self.permanent_impact > 0.0:
            raise ParameterError(
                "terminal_penalty: requires 2*terminal_penalty - permanent_impact > 0, "
                f"got terminal_penalty={lam!r}, permanent_impact={self.permanent_impact!r}"
            )

    @property
    def fuel_limit(self) -> bool:
        """True when the terminal penalty is infinite."""
        return math.isinf(self.terminal_penalty)

    def replace(self, **changes: Any) -> "ModelParams":
        data = asdict(self)
        data.update(changes)
        return ModelParams(**data)

    def to_dict(self) -> dict[str, float | str]:
        out: dict[str, float | str] = {}
        for k, v in asdict(self).items():
            out[k] = "inf" if math.isinf(v) else v
        return out


@dataclass(frozen=True)
class DerivedParams:
    alpha: float | None  # None in the fuel limit
    risk_drift: float  # B = (gamma/2) phi0^2 + kappa rho chi0 phi0
    modified_drift: float  # mu - B


def _positive(p: ModelParams, name: str) -> None:
    value = getattr(p, name)
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name}: must be finite and > 0, got {value!r}")


def _finite(p: ModelParams, name: str) -> None:
    if not math.isfinite(getattr(p, name)):
        raise ParameterError(f"{name}: must be finite, got {getattr(p, name)!r}")


REQUIRED = (
    "initial_shares",
    "horizon",
    "initial_price",
    "drift",
    "permanent_impact",
    "temporary_impact",
    "terminal_penalty",
)
OPTIONAL = ("market_vol", "exec_risk_strategy", "exec_risk_price", "correlation")


def parse_penalty(value: Any) -> float:
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinite", "+inf", "infinity"):
            return INFINITE
        try:
            return float(text)
        except ValueError:
            raise ParameterError(f"terminal_penalty: cannot parse {value!r}") from None
    return value


def build_params(raw: Mapping[str, Any]) -> ModelParams:
    """Validate a mapping of named scalars into :class:`ModelParams`.

    Unknown keys and missing required keys are rejected.
    """
    unknown = sorted(set(raw) - set(REQUIRED) - set(OPTIONAL))
    if unknown:
        raise ParameterError(f"unknown parameter(s): {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
    values = dict(raw)
    values["terminal_penalty"] = parse_penalty(values["terminal_penalty"])
    return ModelParams(**values)


def derive(p: ModelParams) -> DerivedParams:
    """Compute alpha = 2 kappa / (2 lambda - gamma), B and mu - B."""
    phi0 = p.exec_risk_strategy
    B = 0.5 * p.permanent_impact * phi0 * phi0 + p.temporary_impact * p.correlation * p.exec_risk_price * phi0
    if p.fuel_limit:
        alpha = None
    else:
        alpha = 2.0 * p.temporary_impact / (2.0 * p.terminal_penalty - p.permanent_impact)
    return DerivedParams(alpha=alpha, risk_drift=B, modified_drift=p.drift - B)


def phi0_from_p0(p0: float, initial_shares: float, horizon: float) -> float:
    """Execution-risk magnitude giving an average relative fill deviation ``p0`` per day."""
    if p0 < 0:
        raise ParameterError(f"p0: must be >= 0, got {p0!r}")
    return p0 * math.sqrt(initial_shares / horizon)
