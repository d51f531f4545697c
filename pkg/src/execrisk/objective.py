"""Pathwise and Monte Carlo revenue functionals.

Two estimators of the same expected revenue:

* ``raw``: the left-point Ito sum of ``-(S - S0_0) dy`` plus the terminal
  mark-to-market ``(S0(T) - S0_0) y(T)`` minus the quadratic penalty.
* ``rewritten``: the integrated-by-parts form, a sum of five deterministic-
  looking components whose mean equals the raw mean (up to O(dt)); the
  martingale terms that separate them pathwise have zero expectation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .params import ModelParams, derive
from .simulate import PathEnsemble

COMPONENTS = ("terminal_penalty", "permanent", "drift", "risk_interaction", "temporary")


def compensated_sum(terms: np.ndarray) -> np.ndarray:
    """Neumaier summation along the last axis, vectorised over the rest."""
    cols = np.ascontiguousarray(np.moveaxis(np.asarray(terms, dtype=float), -1, 0))
    total = np.zeros(cols.shape[1:])
    comp = np.zeros(cols.shape[1:])
    for x in cols:
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp += np.where(big, (total - t) + x, (x - t) + total)
        total = t
    return total + comp


def _penalty(lam: float, yN: np.ndarray) -> np.ndarray:
    if math.isinf(lam):
        return np.where(yN == 0.0, 0.0, -math.inf)
    return -lam * yN * yN


def raw_objective_path(ens: PathEnsemble, params: ModelParams | None = None) -> np.ndarray:
    """Per-path realised revenue in the form of the original control problem."""
    p = ens.params if params is None else params
    if params is None:
        S = ens.S
    else:
        S0 = p.initial_price + p.drift * ens.t + p.permanent_impact * (ens.y - p.initial_shares) + p.market_vol * ens.Bm
        S = S0 + p.temporary_impact * (ens.H - ens.v)
    dy = np.diff(ens.y, axis=1)
    trading = -compensated_sum((S[:, :-1] - p.initial_price) * dy)
    yN = ens.y[:, -1]
    S0N = p.initial_price + p.drift * ens.t[-1] + p.permanent_impact * (yN - p.initial_shares) + p.market_vol * ens.Bm[:, -1]
    return trading + (S0N - p.initial_price) * yN + _penalty(p.terminal_penalty, yN)


def rewritten_components(ens: PathEnsemble, params: ModelParams | None = None) -> dict[str, np.ndarray]:
    p = ens.params if params is None else params
    B = derive(p).risk_drift
    dt = p.horizon / ens.plan.n_steps
    y = ens.y[:, :-1]
    v = ens.v[:, :-1]
    tau = p.horizon - ens.t[:-1]
    yN = ens.y[:, -1]
    Y = p.initial_shares
    return {
        "terminal_penalty": _penalty(p.terminal_penalty, yN),
        "permanent": 0.5 * p.permanent_impact * (yN * yN - Y * Y),
        "drift": compensated_sum(p.drift * y * dt),
        "risk_interaction": compensated_sum(B * tau[None, :] * v * dt),
        "temporary": compensated_sum(-p.temporary_impact * v * v * dt),
    }


def rewritten_objective_path(ens: PathEnsemble, params: ModelParams | None = None) -> np.ndarray:
    comps = rewritten_components(ens, params)
    return _add_components(comps)


def _add_components(comps: dict[str, np.ndarray]) -> np.ndarray:
    stacked = np.stack([comps[name] for name in COMPONENTS], axis=-1)
    return compensated_sum(stacked)


def mean_se(x: np.ndarray) -> tuple[float, float]:
    """Exactly-rounded mean and standard error (order independent)."""
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    mean = math.fsum(x) / n
    if n < 2:
        raise ValueError("standard error needs at least two paths")
    if not math.isfinite(mean):
        return mean, math.nan
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


@dataclass
class RevenueReport:
    raw_mean: float
    raw_se: float
    rewritten_mean: float
    rewritten_se: float
    decomposition: dict[str, float]
    decomposition_se: dict[str, float]
    n_paths: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def estimate(ens: PathEnsemble, params: ModelParams | None = None) -> RevenueReport:
    """Monte Carlo estimates of both revenue forms and the rewritten decomposition."""
    if ens.n_paths < 2:
        raise ValueError("estimate needs at least two paths for a standard error")
    raw = raw_objective_path(ens, params)
    comps = rewritten_components(ens, params)
    decomposition: dict[str, float] = {}
    decomposition_se: dict[str, float] = {}
    for name in COMPONENTS:
        decomposition[name], decomposition_se[name] = mean_se(comps[name])
    raw_mean, raw_se = mean_se(raw)
    _, rewritten_se = mean_se(_add_components(comps))
    return RevenueReport(
        raw_mean=raw_mean,
        raw_se=raw_se,
        rewritten_mean=math.fsum(decomposition.values()),
        rewritten_se=rewritten_se,
        decomposition=decomposition,
        decomposition_se=decomposition_se,
        n_paths=ens.n_paths,
    )


def path_functionals(ens: PathEnsemble) -> dict[str, np.ndarray]:
    """Per-path raw and rewritten values plus components, for tabular export."""
    comps = rewritten_components(ens)
    out = {"raw": raw_objective_path(ens), "rewritten": _add_components(comps)}
    out.update(comps)
    return out


def discretization_drift(ens: PathEnsemble, params: ModelParams | None = None) -> np.ndarray:
    """Per-path compensator of ``raw - rewritten`` on the Euler grid.

    Sums the conditional means of the step-wise gap: the quadratic variation
    of the drift ``(gamma/2) v^2 dt^2``, the clamp of the risk terms
    ``B (T-t)(v+ - v) dt`` and the drift-timing term ``-mu v dt^2``. Its mean
    is the deterministic part of the gap between the two estimators; the
    remainder is martingale noise. The ``kappa H(T) y(T)`` cross term, which
    is mean-zero only for zero correlation, is not included.
    """
    p = ens.params if params is None else params
    B = derive(p).risk_drift
    dt = p.horizon / ens.plan.n_steps
    v = ens.v[:, :-1]
    tau = (p.horizon - ens.t[:-1])[None, :]
    terms = 0.5 * p.permanent_impact * v * v * dt * dt + B * tau * (np.maximum(v, 0.0) - v) * dt - p.drift * v * dt * dt
    return compensated_sum(terms)
