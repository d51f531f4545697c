"""Euler-Maruyama simulation of holdings, impact noise and prices.

The state equation is

    dy = -v dt + phi0 sqrt((T - t) v+) dW,      y(0) = Y,

with ``H`` accumulating ``chi0 sqrt((T - t) v+) dZ``. Prices are not
integrated: the market price ``S0`` and the execution price ``S`` are exact
functions of the simulated state and are rebuilt on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import DEFAULT_BACKEND, get_backend
from .noise import CHANNEL_B, CHANNEL_PERP, CHANNEL_W, NoisePlan
from .params import ModelParams, derive
from .policy import Policy, PolicyKind


def step_state(y, v, dW, dt, t, p: ModelParams):
    """One Euler step of the holdings. Negative rates carry no execution risk."""
    amp = np.sqrt((p.horizon - t) * np.maximum(v, 0.0))
    return y - v * dt + p.exec_risk_strategy * amp * dW


def step_H(H, v, dZ, dt, t, p: ModelParams):
    """One Euler step of the temporary-impact noise integral H."""
    amp = np.sqrt((p.horizon - t) * np.maximum(v, 0.0))
    return H + p.exec_risk_price * amp * dZ


def time_grid(horizon: float, n_steps: int) -> np.ndarray:
    dt = horizon / n_steps
    t = np.arange(n_steps + 1, dtype=float) * dt
    t[-1] = horizon
    return t


@dataclass
class PathEnsemble:
    """Simulated trajectories, one row per path, one column per grid node.

    ``v[:, k]`` is the rate applied over ``[t_k, t_{k+1})``; the last column
    holds the rule evaluated at ``T`` (or, for the fuel-limit rule, a copy of
    the penultimate value).
    """

    params: ModelParams
    policy: Policy
    plan: NoisePlan
    t: np.ndarray
    y: np.ndarray
    v: np.ndarray
    H: np.ndarray
    Bm: np.ndarray
    backend: str = DEFAULT_BACKEND
    _noise: tuple | None = field(default=None, repr=False)

    @property
    def dt(self) -> float:
        return self.params.horizon / self.plan.n_steps

    @property
    def n_paths(self) -> int:
        return self.y.shape[0]

    @property
    def S0(self) -> np.ndarray:
        p = self.params
        return p.initial_price + p.drift * self.t + p.permanent_impact * (self.y - p.initial_shares) + p.market_vol * self.Bm

    @property
    def S(self) -> np.ndarray:
        return self.S0 + self.params.temporary_impact * (self.H - self.v)

    def noise(self):
        """The increments ``(dW, dZ, dB)`` that drove this ensemble, regenerated from their keys."""
        if self._noise is None:
            self._noise = draw_increments(self.plan, self.dt, self.params.correlation, self.backend)
        return self._noise


def draw_increments(plan: NoisePlan, dt: float, rho: float, backend: str | None = None):
    kern = get_backend(backend)
    paths = plan.path_indices
    sqdt = math.sqrt(dt)
    perp = math.sqrt(1.0 - rho * rho)
    dW = sqdt * kern.philox_normals(plan.seed, paths, plan.n_steps, CHANNEL_W)
    dZ = rho * dW + perp * (sqdt * kern.philox_normals(plan.seed, paths, plan.n_steps, CHANNEL_PERP))
    dB = sqdt * kern.philox_normals(plan.seed, paths, plan.n_steps, CHANNEL_B)
    return dW, dZ, dB


def simulate_ensemble(
    policy: Policy,
    plan: NoisePlan,
    *,
    backend: str | None = None,
    threads: int = 1,
    chunk: int | None = None,
) -> PathEnsemble:
    """Simulate ``plan.n_paths`` paths of the state under ``policy``.

    The output depends only on ``(policy, plan)`` and the backend, never on
    ``threads`` or ``chunk``.
    """
    p = policy.params
    name = DEFAULT_BACKEND if backend is None else backend
    kern = get_backend(name)
    n = plan.n_steps
    t = time_grid(p.horizon, n)
    dt = p.horizon / n
    slope, intercept = policy.coefficients(t[:-1])
    tau = p.horizon - t[:-1]
    kwargs = {"threads": threads}
    if chunk is not None:
        kwargs["chunk"] = chunk
    y, v, H, Bm = kern.simulate_affine(
        np.ascontiguousarray(slope, dtype=np.float64),
        np.ascontiguousarray(intercept, dtype=np.float64),
        np.ascontiguousarray(tau, dtype=np.float64),
        p.initial_shares,
        dt,
        p.exec_risk_strategy,
        p.exec_risk_price,
        p.correlation,
        plan.seed,
        plan.path_indices,
        **kwargs,
    )
    term = policy.terminal_coefficients()
    if term is None:
        v[:, n] = v[:, n - 1]
    else:
        v[:, n] = term[0] * y[:, n] + term[1]
    return PathEnsemble(p, policy, plan, t, y, v, H, Bm, backend=name)


def transform_tilde(ens: PathEnsemble) -> np.ndarray:
    """Shifted holdings ``y - (mu - B)(T - t)^2 / (4 kappa)`` for a fuel-limit ensemble."""
    if ens.policy.kind is not PolicyKind.FUEL_LIMIT_OPTIMAL:
        raise ValueError("transform_tilde requires a fuel_limit ensemble")
    p = ens.params
    shift = derive(p).modified_drift * (p.horizon - ens.t) ** 2 / (4.0 * p.temporary_impact)
    return ens.y - shift[None, :]


def integrate_tilde(ens: PathEnsemble) -> np.ndarray:
    """Direct Euler integration of the shifted-holdings SDE on the ensemble's own dW.

    ``d ytilde = -(ytilde/(T-t) - (mu-B)(T-t)/(2 kappa)) dt + phi0 sqrt(ytilde+) dW``
    """
    p = ens.params
    d = derive(p)
    dW = ens.noise()[0]
    n = ens.plan.n_steps
    dt = ens.dt
    out = np.empty_like(ens.y)
    yt = np.full(ens.n_paths, p.initial_shares - d.modified_drift * p.horizon**2 / (4.0 * p.temporary_impact))
    out[:, 0] = yt
    for k in range(n):
        tau = p.horizon - ens.t[k]
        drift = yt / tau - d.modified_drift * tau / (2.0 * p.temporary_impact)
        yt = yt - drift * dt + p.exec_risk_strategy * np.sqrt(np.maximum(yt, 0.0)) * dW[:, k]
        out[:, k + 1] = yt
    return out
