"""Adaptive Simpson quadrature with Richardson correction."""

from __future__ import annotations

import math
from typing import Callable


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_depth: int = 60) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Raises :class:`QuadratureError` if an interval would need more than
    ``max_depth`` bisections.
    """
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    parts: list[float] = []
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        if abs(delta) <= 15.0 * eps:
            parts.append(left + right + delta / 15.0)
            continue
        if depth >= max_depth:
            raise QuadratureError(f"no convergence on [{lo!r}, {hi!r}] at depth {depth}")
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return math.fsum(parts)
