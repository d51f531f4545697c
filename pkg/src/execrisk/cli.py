"""Command-line driver: ``execrisk {simulate,compare,verify,revenue} --scenario FILE``.

Exit status: 0 on success, 1 when a verification check fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__
from .compare import late_rate_std, simulate_policies
from .fileio import (
    ScenarioError,
    compare_columns,
    dumps_json,
    fmt,
    load_scenario,
    report_json,
    sidecar,
    write_compare_csv,
    write_ensemble_csv,
    write_path_functionals,
)
from .objective import estimate, path_functionals
from .params import derive
from .simulate import simulate_ensemble
from .verify import run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2

VERIFY_PATHS = 10_000
VERIFY_STEPS = 1000


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario file, or a bundled name (easy, difficult)")
    common.add_argument("--out", help="output directory (default: scenario 'out' key or ./execrisk_out)")
    common.add_argument("--paths", type=int, help="number of paths (overrides the scenario)")
    common.add_argument("--steps", type=int, help="number of time steps (overrides the scenario)")
    common.add_argument("--seed", type=int, help="64-bit noise seed (overrides the scenario)")
    common.add_argument("--backend", choices=["cython", "python"], help="simulation kernel")
    common.add_argument("--threads", type=int, default=1, help="kernel threads; never changes results")

    parser = argparse.ArgumentParser(prog="execrisk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"execrisk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate the first scenario policy")
    cmp_ = sub.add_parser("compare", parents=[common], help="simulate several policies on shared noise")
    cmp_.add_argument("--policies", help="comma-separated policy names (overrides the scenario)")
    ver = sub.add_parser("verify", parents=[common], help="run the verification suite")
    ver.add_argument("--fault", choices=["alpha"], help="inject a known fault (negative control)")
    rev = sub.add_parser("revenue", parents=[common], help="Monte Carlo revenue for each scenario policy")
    rev.add_argument("--per-path", action="store_true", help="also write per-path functionals as CSV")
    return parser


def _out_dir(args, scenario) -> Path:
    out = Path(args.out or scenario.out or "execrisk_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_report(label: str, rep) -> None:
    print(f"[{label}] n_paths={rep.n_paths}")
    print(f"  raw_mean       {fmt(rep.raw_mean)}  se {fmt(rep.raw_se)}")
    print(f"  rewritten_mean {fmt(rep.rewritten_mean)}  se {fmt(rep.rewritten_se)}")
    for name, value in rep.decomposition.items():
        print(f"    {name:<18} {fmt(value)}")


def cmd_simulate(args, scenario) -> int:
    out = _out_dir(args, scenario)
    policy = scenario.policy_objects()[0]
    ens = simulate_ensemble(policy, scenario.plan(), backend=args.backend, threads=args.threads)
    write_ensemble_csv(ens, out / "ensemble.csv")
    (out / "ensemble.json").write_text(dumps_json(sidecar(ens)), encoding="utf-8")
    yN = ens.y[:, -1]
    mean = math.fsum(yN) / yN.size
    rms = math.sqrt(math.fsum(yN * yN) / yN.size)
    print(f"policy {policy.kind.value}: {ens.n_paths} paths x {scenario.n_steps} steps -> {out}")
    print(f"  terminal holdings mean {fmt(mean)}  rms {fmt(rms)}")
    if ens.n_paths >= 2:
        rep = estimate(ens)
        (out / "revenue.json").write_text(report_json({policy.kind.value: rep.to_dict()}), encoding="utf-8")
        _print_report(policy.kind.value, rep)
    return EXIT_OK


def cmd_compare(args, scenario) -> int:
    names = list(scenario.policies)
    if args.policies:
        names = [s.strip() for s in args.policies.split(",") if s.strip()]
    if len(names) < 2:
        raise ScenarioError("compare needs at least two policies")
    from .policy import Policy

    policies = [Policy.from_name(n, scenario.params) for n in names]
    out = _out_dir(args, scenario)
    ensembles = simulate_policies(policies, scenario.plan(), backend=args.backend, threads=args.threads)
    labels = compare_columns([p.kind.value for p in policies])
    write_compare_csv(ensembles, [p.kind.value for p in policies], out / "compare.csv")
    doc = sidecar(ensembles[0], {"policies": {lab: pol.descriptor() for lab, pol in zip(labels, policies)}})
    del doc["policy"]
    (out / "compare.json").write_text(dumps_json(doc), encoding="utf-8")
    print(f"compared {', '.join(labels)} on shared noise -> {out}")
    for lab, ens in zip(labels, ensembles):
        ts, cs = late_rate_std(ens)
        print(f"  {lab:<22} late rate std: time-series {fmt(ts)}  cross-section {fmt(cs)}")
    return EXIT_OK


def cmd_verify(args, scenario) -> int:
    out = _out_dir(args, scenario)
    p = scenario.params
    alpha = None
    if args.fault == "alpha":
        alpha = derive(p).alpha * (1.0 + 1e-3)
    # The fuel-limit statistics need a large ensemble; the scenario's path
    # and step counts apply only when given on the command line.
    report = run_suite(
        p,
        n_paths=args.paths or VERIFY_PATHS,
        seed=scenario.seed,
        dt=p.horizon / (args.steps or VERIFY_STEPS),
        alpha=alpha,
        backend=args.backend,
    )
    (out / "verify.json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.table())
    print("verification", "PASSED" if report.passed else "FAILED")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def cmd_revenue(args, scenario) -> int:
    out = _out_dir(args, scenario)
    if scenario.n_paths < 2:
        raise ScenarioError("revenue needs n_paths >= 2")
    policies = scenario.policy_objects()
    labels = compare_columns([p.kind.value for p in policies])
    doc = {}
    for lab, ens in zip(labels, simulate_policies(policies, scenario.plan(), backend=args.backend, threads=args.threads)):
        rep = estimate(ens)
        doc[lab] = rep.to_dict()
        _print_report(lab, rep)
        if args.per_path:
            write_path_functionals(path_functionals(ens), ens.plan.path_indices, out / f"revenue_paths_{lab}.csv")
    (out / "revenue.json").write_text(report_json(doc), encoding="utf-8")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "verify": cmd_verify, "revenue": cmd_revenue}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ScenarioError("--threads must be >= 1")
        overrides = {"n_paths": args.paths, "n_steps": args.steps, "seed": args.seed, "out": args.out}
        scenario = load_scenario(args.scenario, overrides)
        return COMMANDS[args.command](args, scenario)
    except ValueError as exc:  # ScenarioError, ParameterError, unknown backend
        print(f"execrisk: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
