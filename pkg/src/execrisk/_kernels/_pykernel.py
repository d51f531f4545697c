"""Pure-numpy fallback for the affine-feedback Euler-Maruyama kernel.

Vectorised across paths, sequential in time. Paths are processed in chunks;
chunking and threading never change a path's values because every increment
is keyed by its absolute path index.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..noise import CHANNEL_B, CHANNEL_PERP, CHANNEL_W, normals

DEFAULT_CHUNK = 512


def simulate_affine(slope, intercept, tau, y0, dt, phi0, chi0, rho, seed, paths, threads=1, chunk=DEFAULT_CHUNK):
    slope = np.ascontiguousarray(slope, dtype=np.float64)
    intercept = np.ascontiguousarray(intercept, dtype=np.float64)
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    paths = np.ascontiguousarray(paths, dtype=np.uint64)
    n_steps = slope.shape[0]
    n_paths = paths.shape[0]
    y = np.empty((n_paths, n_steps + 1))
    v = np.zeros((n_paths, n_steps + 1))
    H = np.empty((n_paths, n_steps + 1))
    Bm = np.empty((n_paths, n_steps + 1))
    sqdt = math.sqrt(dt)
    perp = math.sqrt(1.0 - rho * rho)
    steps = np.arange(n_steps, dtype=np.uint64)
    chunk = max(1, int(chunk))

    def run(lo: int) -> None:
        hi = min(lo + chunk, n_paths)
        idx = paths[lo:hi]
        zw = normals(seed, idx, steps, CHANNEL_W)
        zp = normals(seed, idx, steps, CHANNEL_PERP)
        zb = normals(seed, idx, steps, CHANNEL_B)
        yk = np.full(hi - lo, float(y0))
        Hk = np.zeros(hi - lo)
        Bk = np.zeros(hi - lo)
        y[lo:hi, 0] = yk
        H[lo:hi, 0] = Hk
        Bm[lo:hi, 0] = Bk
        for k in range(n_steps):
            vk = slope[k] * yk + intercept[k]
            amp = np.sqrt(tau[k] * np.maximum(vk, 0.0))
            dW = sqdt * zw[:, k]
            dZ = rho * dW + perp * (sqdt * zp[:, k])
            dB = sqdt * zb[:, k]
            yk = yk - vk * dt + phi0 * amp * dW
            Hk = Hk + chi0 * amp * dZ
            Bk = Bk + dB
            v[lo:hi, k] = vk
            y[lo:hi, k + 1] = yk
            H[lo:hi, k + 1] = Hk
            Bm[lo:hi, k + 1] = Bk

    starts = range(0, n_paths, chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for lo in starts:
            run(lo)
    return y, v, H, Bm


def philox_normals(seed, paths, n_steps, channel):
    return normals(seed, np.asarray(paths, dtype=np.uint64), np.arange(n_steps, dtype=np.uint64), channel)
