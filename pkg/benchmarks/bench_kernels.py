"""Time the compiled and numpy simulation kernels on the same ensemble.

    python3 benchmarks/bench_kernels.py --paths 10000 --steps 1000
"""

import argparse
import time

import numpy as np

from execrisk._kernels import BACKENDS
from execrisk.noise import NoisePlan
from execrisk.params import ModelParams, phi0_from_p0
from execrisk.policy import Policy
from execrisk.simulate import simulate_ensemble


def desk(p0: float) -> ModelParams:
    return ModelParams(
        initial_shares=1e6,
        horizon=1.0,
        initial_price=50.0,
        drift=0.0,
        permanent_impact=2.5e-7,
        temporary_impact=2.5e-6,
        terminal_penalty=2.5e-3,
        market_vol=0.945,
        exec_risk_strategy=phi0_from_p0(p0, 1e6, 1.0),
        exec_risk_price=0.945,
    )


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    pol = Policy.from_name("penalized", desk(0.3))
    plan = NoisePlan(2024, args.steps, args.paths)
    results, secs_by = {}, {}
    for name in sorted(BACKENDS):
        secs, ens = best_of(lambda: simulate_ensemble(pol, plan, backend=name, threads=args.threads), args.repeat)
        results[name], secs_by[name] = ens, secs
        rate = args.paths * args.steps / secs
        print(f"{name:<8} {secs:9.3f} s   {rate:12.4g} path-steps/s")
    if len(results) == 2:
        a, b = results["cython"].y, results["python"].y
        print(f"speed-up {secs_by['python'] / secs_by['cython']:.2f}x, max |dy|/Y = {np.max(np.abs(a - b)) / 1e6:.3g}")
    else:
        print("compiled kernel not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
