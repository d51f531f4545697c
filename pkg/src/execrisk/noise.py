"""Counter-based Gaussian increments.

Each standard normal is a pure function of ``(seed, path, step, channel)``:
one Philox4x32-10 block is computed for the counter
``(step, path_lo, path_hi, channel)`` under the key ``(seed_lo, seed_hi)``,
its four words are packed into two 53-bit uniforms, and the cosine branch of
Box-Muller turns them into one normal. Nothing depends on evaluation order,
so paths can be generated in any chunking or thread schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK32 = 0xFFFFFFFF
PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10

CHANNEL_W = 0  # holdings noise
CHANNEL_PERP = 1  # orthogonal component mixed into the price-impact noise Z
CHANNEL_B = 2  # market noise
N_CHANNELS = 3

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def philox4x32(c0, c1, c2, c3, k0: int, k1: int):
    """Philox4x32-10 on uint64 arrays that hold 32-bit words."""
    m0 = np.uint64(PHILOX_M0)
    m1 = np.uint64(PHILOX_M1)
    mask = np.uint64(MASK32)
    s32 = np.uint64(32)
    x0, x1, x2, x3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
    for r in range(PHILOX_ROUNDS):
        if r:
            k0 = (k0 + PHILOX_W0) & MASK32
            k1 = (k1 + PHILOX_W1) & MASK32
        p0 = m0 * x0
        p1 = m1 * x2
        x0, x1, x2, x3 = (
            (p1 >> s32) ^ x1 ^ np.uint64(k0),
            p1 & mask,
            (p0 >> s32) ^ x3 ^ np.uint64(k1),
            p0 & mask,
        )
    return x0, x1, x2, x3


def split_seed(seed: int) -> tuple[int, int]:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return seed & MASK32, seed >> 32


def normals(seed: int, paths, steps, channel: int) -> np.ndarray:
    """Standard normals on the grid ``paths x steps`` for one channel.

    ``paths`` and ``steps`` are integer sequences of absolute indices.
    """
    k0, k1 = split_seed(seed)
    paths = np.asarray(paths, dtype=np.uint64)[:, None]
    steps = np.asarray(steps, dtype=np.uint64)[None, :]
    x0, x1, x2, x3 = philox4x32(
        np.broadcast_to(steps, (paths.shape[0], steps.shape[1])),
        paths & np.uint64(MASK32),
        paths >> np.uint64(32),
        np.uint64(channel),
        k0,
        k1,
    )
    return box_muller(x0, x1, x2, x3)


def box_muller(x0, x1, x2, x3) -> np.ndarray:
    s32 = np.uint64(32)
    s11 = np.uint64(11)
    a = ((x0 << s32) | x1) >> s11
    b = ((x2 << s32) | x3) >> s11
    u1 = (a.astype(np.float64) + 1.0) * _INV_2_53  # (0, 1]
    u2 = b.astype(np.float64) * _INV_2_53  # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


@dataclass(frozen=True)
class NoisePlan:
    """Which increments an ensemble draws: seed, grid size and path range."""

    seed: int
    n_steps: int
    n_paths: int
    path_offset: int = 0

    def __post_init__(self) -> None:
        split_seed(self.seed)
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.path_offset < 0 or self.path_offset + self.n_paths > 2**64:
            raise ValueError("path range out of bounds")

    @property
    def path_indices(self) -> np.ndarray:
        return np.arange(self.path_offset, self.path_offset + self.n_paths, dtype=np.uint64)


def increments(plan: NoisePlan, dt: float, rho: float, paths=None):
    """Brownian increments ``(dW, dZ, dB)``, each of shape ``(n_paths, n_steps)``.

    ``corr(dW, dZ) = rho``; ``dB`` is independent of both.
    """
    idx = plan.path_indices if paths is None else np.asarray(paths, dtype=np.uint64)
    steps = np.arange(plan.n_steps, dtype=np.uint64)
    sq = math.sqrt(dt)
    zw = normals(plan.seed, idx, steps, CHANNEL_W)
    zp = normals(plan.seed, idx, steps, CHANNEL_PERP)
    zb = normals(plan.seed, idx, steps, CHANNEL_B)
    dW = sq * zw
    dZ = rho * dW + math.sqrt(1.0 - rho * rho) * (sq * zp)
    dB = sq * zb
    return dW, dZ, dB
