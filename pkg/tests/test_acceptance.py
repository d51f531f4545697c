"""Acceptance criteria for the desk case: 1e6 shares over one day,
lambda = 1000 kappa, zero drift and correlation, p0 in {10%, 30%}.

Each criterion records one PASS/FAIL line, printed in the pytest terminal
summary (or directly when this file is run as a script). Every tolerance is
pinned below.
"""

import math
import time

import numpy as np
import pytest

from execrisk.cli import main
from execrisk.compare import simulate_policies
from execrisk.noise import NoisePlan
from execrisk.objective import discretization_drift, estimate
from execrisk.params import derive
from execrisk.policy import Policy, rate_fuel_limit, rate_penalized
from execrisk.verify import check_argmax_consistency, check_fuel_limit_statistics, check_hjb, check_riccati

from conftest import ACCEPTANCE_LINES, KAPPA, Y, desk_params

N_PATHS = 10_000
DT = 1e-3

# tolerances
RICCATI_TOL, RICCATI_GRID, RICCATI_SECONDS = 1e-6, 10_000, 1.0
HJB_TOL, HJB_GRID, HJB_QUAD_TOL, HJB_SECONDS = 1e-6, 200, 1e-10, 10.0
ARGMAX_TOL, ARGMAX_POINTS, ARGMAX_SECONDS = 1e-6, 100, 5.0
EQUIV_SE_MULT, EQUIV_DTS, EQUIV_SECONDS = 3.0, (4e-3, 2e-3, 1e-3), 60.0
LINEAR_RATIO = (1.8, 2.2)  # deterministic gap ratio under dt halving
FUEL_Z, FUEL_RMS_RATIO, FUEL_SECONDS = 3.0, 1.4, 60.0
SHAPE_Z, SHAPE_CHECKPOINTS = 3.0, (0.4, 0.5, 0.6)
LATE_START, LATE_SEEDS, LATE_POOLED_Z = 0.9, (1, 2, 3, 4, 5), 3.0
LIMIT_MULTIPLIERS, LIMIT_FINAL = (1e2, 1e4, 1e6, 1e8), 1e-3

EQUIV_SEED = 4242
FUEL_SEED = 12345


def record(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def blocking(entries):
    return [e for e in entries if not e.informational]


@pytest.mark.slow
@pytest.mark.parametrize("p0", [0.1, 0.3])
def test_1_riccati(p0):
    p = desk_params(p0)
    start = time.perf_counter()
    entries = check_riccati(p, n=RICCATI_GRID, tol=RICCATI_TOL)
    elapsed = time.perf_counter() - start
    worst = max(e.value for e in blocking(entries) if e.tolerance > 0)
    ok = all(e.passed for e in blocking(entries)) and elapsed < RICCATI_SECONDS
    record(f"1 (p0={p0})", ok, f"riccati max rel residual {worst:.3e} < {RICCATI_TOL:g}, {elapsed:.2f}s < {RICCATI_SECONDS:g}s")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("p0", [0.1, 0.3])
def test_2_hjb(p0):
    p = desk_params(p0)
    start = time.perf_counter()
    entries = check_hjb(p, nt=HJB_GRID, ny=HJB_GRID, tol=HJB_TOL, quad_tol=HJB_QUAD_TOL)
    elapsed = time.perf_counter() - start
    main_residual = next(e for e in entries if e.name.startswith("hjb residual"))
    ok = all(e.passed for e in blocking(entries)) and elapsed < HJB_SECONDS
    record(f"2 (p0={p0})", ok, f"hjb rel residual {main_residual.value:.3e} < {HJB_TOL:g}, {elapsed:.2f}s < {HJB_SECONDS:g}s")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("p0", [0.1, 0.3])
def test_3_argmax(p0):
    p = desk_params(p0)
    start = time.perf_counter()
    entries = check_argmax_consistency(p, n=ARGMAX_POINTS, tol=ARGMAX_TOL)
    elapsed = time.perf_counter() - start
    ok = all(e.passed for e in entries) and elapsed < ARGMAX_SECONDS
    record(f"3 (p0={p0})", ok, f"argmax max rel gap {entries[0].value:.3e} < {ARGMAX_TOL:g}, {elapsed:.2f}s < {ARGMAX_SECONDS:g}s")
    assert ok


@pytest.mark.slow
def test_4_revenue_forms_agree():
    p = desk_params(0.3)
    policies = [Policy.from_name(k, p) for k in ("penalized", "adaptive_vwap", "deterministic_vwap")]
    start = time.perf_counter()
    results = {pol.kind.value: [] for pol in policies}
    for dt in EQUIV_DTS:
        plan = NoisePlan(EQUIV_SEED, int(round(p.horizon / dt)), N_PATHS)
        for pol, ens in zip(policies, simulate_policies(policies, plan)):
            rep = estimate(ens)
            drift = math.fsum(discretization_drift(ens)) / ens.n_paths
            results[pol.kind.value].append((dt, rep.raw_mean - rep.rewritten_mean, math.hypot(rep.raw_se, rep.rewritten_se), drift))
            del ens
    elapsed = time.perf_counter() - start
    ok = elapsed < EQUIV_SECONDS
    details = []
    for name, rows in results.items():
        drifts = [r[3] for r in rows]
        ratios = [a / b for a, b in zip(drifts, drifts[1:])]
        linear = all(LINEAR_RATIO[0] <= r <= LINEAR_RATIO[1] for r in ratios)
        C = max(abs(d) / dt for dt, _, _, d in rows)
        within = all(abs(gap) <= EQUIV_SE_MULT * se + C * dt for dt, gap, se, _ in rows)
        dt, gap, se, _ = rows[-1]
        ok = ok and linear and within
        details.append(
            f"{name}: |gap| {abs(gap):.4g} <= 3*{se:.4g} + {C:.4g}*{dt:g}; dt-halving ratios {', '.join(f'{r:.3f}' for r in ratios)}"
        )
    record("4", ok, "; ".join(details) + f"; {elapsed:.1f}s < {EQUIV_SECONDS:g}s")
    assert ok


@pytest.mark.slow
def test_5_fuel_constraint():
    p = desk_params(0.3, lam=math.inf)
    start = time.perf_counter()
    entries = check_fuel_limit_statistics(p, n_paths=N_PATHS, dt=DT, seed=FUEL_SEED, z_tol=FUEL_Z, rms_ratio=FUEL_RMS_RATIO)
    elapsed = time.perf_counter() - start
    z, rms = entries
    ok = z.passed and rms.passed and elapsed < FUEL_SECONDS
    record("5", ok, f"max |z| {z.value:.3f} < {FUEL_Z:g}; RMS ratio {rms.value:.3f} >= {FUEL_RMS_RATIO:g}; {elapsed:.1f}s < {FUEL_SECONDS:g}s")
    assert ok


def _late_std_per_path(ens):
    mask = (ens.t > LATE_START * ens.params.horizon) & (ens.t < ens.params.horizon)
    return np.std(ens.v[:, mask], axis=1, ddof=1), np.std(ens.v[:, mask], axis=0, ddof=1)


def _mean_recursion(pol, t, dt):
    slope, intercept = pol.coefficients(t[:-1])
    m = np.empty(t.size)
    m[0] = pol.params.initial_shares
    for k in range(t.size - 1):
        m[k + 1] = (1.0 - slope[k] * dt) * m[k] - intercept[k] * dt
    return m


@pytest.fixture(scope="module")
def shared_runs():
    p = desk_params(0.3)
    pols = [Policy.from_name("penalized", p), Policy.from_name("adaptive_vwap", p)]
    n = int(round(p.horizon / DT))
    runs = {}
    for seed in LATE_SEEDS:
        pen, ada = simulate_policies(pols, NoisePlan(seed, n, N_PATHS))
        ts_pen, cs_pen = _late_std_per_path(pen)
        ts_ada, cs_ada = _late_std_per_path(ada)
        keep = {"ts_diff": ts_ada - ts_pen, "cs_diff": float(cs_ada.mean() - cs_pen.mean())}
        if seed == LATE_SEEDS[0]:
            keep["pen"], keep["ada"] = pen, ada
        runs[seed] = keep
    return pols, runs


@pytest.mark.slow
def test_6a_mean_holdings_below_vwap(shared_runs):
    pols, runs = shared_runs
    pen, ada = runs[LATE_SEEDS[0]]["pen"], runs[LATE_SEEDS[0]]["ada"]
    p = pen.params
    B = derive(p).risk_drift
    ok = True
    zs, paired = [], []
    for tc in SHAPE_CHECKPOINTS:
        k = int(round(tc / DT))
        t = pen.t[k]
        target = Y * (1.0 - t) - B / (4.0 * KAPPA) * t * (1.0 - t)
        col = pen.y[:, k]
        z = (col.mean() - target) / (col.std(ddof=1) / math.sqrt(col.size))
        zs.append(z)
        ok = ok and abs(z) < SHAPE_Z
        # same noise: execution risk moves holdings down relative to the risk-free rule
        d = pen.y[:, k] - ada.y[:, k]
        dz = d.mean() / (d.std(ddof=1) / math.sqrt(d.size))
        paired.append(dz)
        ok = ok and dz < -SHAPE_Z

    # Fuel-limit rule against its own risk-free twin (mu = B) on shared noise:
    # the difference of means is exactly the recursion gap, -(B/4k) t (T-t) + O(dt).
    q = p.replace(terminal_penalty=math.inf)
    fuel, flat = Policy.from_name("fuel_limit", q), Policy.from_name("fuel_limit", q.replace(drift=B))
    plan = NoisePlan(LATE_SEEDS[0], int(round(1.0 / DT)), N_PATHS)
    ef, eflat = simulate_policies([fuel, flat], plan)
    exact = _mean_recursion(fuel, ef.t, DT) - _mean_recursion(flat, ef.t, DT)
    fz = []
    for tc in SHAPE_CHECKPOINTS:
        k = int(round(tc / DT))
        t = ef.t[k]
        assert exact[k] == pytest.approx(-B / (4.0 * KAPPA) * t * (1.0 - t), rel=5e-3)
        d = ef.y[:, k] - eflat.y[:, k]
        z = (d.mean() - exact[k]) / (d.std(ddof=1) / math.sqrt(d.size))
        fz.append(z)
        ok = ok and abs(z) < SHAPE_Z
    record(
        "6a",
        ok,
        f"penalized z vs VWAP-(B/4k)t(T-t) at t={list(SHAPE_CHECKPOINTS)}: {', '.join(f'{z:.2f}' for z in zs)} (|z|<{SHAPE_Z:g}); "
        f"paired z vs adaptive VWAP {', '.join(f'{z:.1f}' for z in paired)} (< -{SHAPE_Z:g}); "
        f"fuel-limit paired shift z {', '.join(f'{z:.2f}' for z in fz)} (|z|<{SHAPE_Z:g})",
    )
    assert ok


@pytest.mark.slow
def test_6b_late_rate_dispersion(shared_runs):
    _, runs = shared_runs
    ts = np.concatenate([runs[s]["ts_diff"] for s in LATE_SEEDS])
    per_seed = [runs[s]["ts_diff"].mean() for s in LATE_SEEDS]
    cs = [runs[s]["cs_diff"] for s in LATE_SEEDS]
    pooled_z = ts.mean() / (ts.std(ddof=1) / math.sqrt(ts.size))
    ok = all(x > 0 for x in per_seed) and all(x > 0 for x in cs) and pooled_z >= LATE_POOLED_Z
    record(
        "6b",
        ok,
        f"adaptive minus penalized late std, time-series per seed {', '.join(f'{x:.1f}' for x in per_seed)}, "
        f"cross-section per seed {', '.join(f'{x:.1f}' for x in cs)} (all > 0); pooled paired z {pooled_z:.2f} >= {LATE_POOLED_Z:g}",
    )
    assert ok


def test_7_limit_consistency():
    t = np.linspace(0.0, 0.9, 10)[:, None]
    y = np.linspace(0.0, Y, 11)[None, :]
    gaps = []
    for m in LIMIT_MULTIPLIERS:
        p = desk_params(0.3, lam=m * KAPPA)
        gaps.append(float(np.max(np.abs(rate_penalized(p, t, y) - rate_fuel_limit(p.replace(terminal_penalty=math.inf), t, y)))))
    ok = all(a > b for a, b in zip(gaps, gaps[1:])) and gaps[-1] < LIMIT_FINAL * Y
    record("7", ok, f"max gaps {', '.join(f'{g:.4g}' for g in gaps)} strictly decreasing; last < {LIMIT_FINAL * Y:g}")
    assert ok


@pytest.mark.slow
def test_8_determinism(tmp_path):
    mismatched = []
    runs = 0
    for scenario in ("easy", "difficult"):
        for command, extra in (("simulate", []), ("compare", []), ("revenue", ["--per-path"]), ("verify", ["--paths", "2000"])):
            outputs = []
            for threads in ("1", "4"):
                out = tmp_path / f"{scenario}-{command}-{threads}"
                code = main([command, "--scenario", scenario, "--out", str(out), "--threads", threads, *extra])
                assert code == 0
                outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            runs += 1
            if outputs[0] != outputs[1] or not outputs[0]:
                mismatched.append(f"{scenario}/{command}")
    ok = not mismatched
    record("8", ok, f"{runs} command pairs byte-identical across reruns with 1 and 4 threads" + (f"; mismatched {mismatched}" if mismatched else ""))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
