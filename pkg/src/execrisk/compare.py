"""Side-by-side policy runs on shared noise, and the statistics used to compare them."""

from __future__ import annotations

import math

import numpy as np

from .noise import NoisePlan
from .policy import Policy
from .simulate import PathEnsemble, simulate_ensemble


def simulate_policies(policies: list[Policy], plan: NoisePlan, **kwargs) -> list[PathEnsemble]:
    """One ensemble per policy, all driven by the same ``(dW, dZ, dB)`` streams."""
    return [simulate_ensemble(pol, plan, **kwargs) for pol in policies]


def late_rate_std(ens: PathEnsemble, start_frac: float = 0.9) -> tuple[float, float]:
    """Dispersion of the scheduled rate on ``start_frac*T < t < T``.

    Returns ``(time-series std averaged over paths, cross-sectional std
    averaged over nodes)``. The terminal node is excluded.
    """
    T = ens.params.horizon
    mask = (ens.t > start_frac * T) & (ens.t < T)
    v = ens.v[:, mask]
    if v.shape[1] < 2:
        raise ValueError("late interval holds fewer than two grid nodes")
    ts = math.fsum(np.std(v, axis=1, ddof=1)) / v.shape[0]
    cs = math.nan
    if v.shape[0] > 1:
        cs = math.fsum(np.std(v, axis=0, ddof=1)) / v.shape[1]
    return ts, cs


def holdings_mean_se(ens: PathEnsemble, t: float) -> tuple[float, float, float]:
    """Mean and standard error of ``y`` at the grid node nearest ``t``; returns ``(t_k, mean, se)``."""
    k = int(round(t / ens.dt))
    col = ens.y[:, k]
    mean = math.fsum(col) / col.size
    se = float(np.std(col, ddof=1)) / math.sqrt(col.size) if col.size > 1 else math.nan
    return float(ens.t[k]), mean, se
