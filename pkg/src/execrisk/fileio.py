"""Scenario files and ensemble export.

Scenario files are flat ``key = value`` text. ``#`` starts a comment, blank
lines are ignored, keys may appear once. Recognised keys are the
:class:`~execrisk.params.ModelParams` field names plus the simulation
controls ``policy`` (comma-separated), ``p0``, ``n_paths``, ``n_steps``,
``seed`` and ``out``. ``terminal_penalty`` accepts ``inf``. ``p0`` and
``exec_risk_strategy`` are mutually exclusive; ``p0`` sets
``exec_risk_strategy = p0 * sqrt(initial_shares / horizon)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .noise import NoisePlan
from .params import OPTIONAL, REQUIRED, ModelParams, ParameterError, build_params, phi0_from_p0
from .policy import Policy

CONTROL_KEYS = ("policy", "p0", "n_paths", "n_steps", "seed", "out")
SIDECAR_FORMAT = "execrisk.ensemble/1"
FLOAT_FMT = "%.17g"


class ScenarioError(ValueError):
    """Unreadable or malformed scenario file."""


@dataclass(frozen=True)
class Scenario:
    params: ModelParams
    policies: tuple[str, ...]
    n_paths: int
    n_steps: int
    seed: int
    p0: float | None = None
    out: str | None = None

    def plan(self) -> NoisePlan:
        return NoisePlan(self.seed, self.n_steps, self.n_paths)

    def policy_objects(self) -> list[Policy]:
        return [Policy.from_name(name, self.params) for name in self.policies]


def parse_scenario_text(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise ScenarioError(f"line {lineno}: empty key or value")
        if key in entries:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _number(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"{key}: not a number: {value!r}") from None


def _integer(key: str, value: str) -> int:
    try:
        return int(value, 0)
    except ValueError:
        pass
    x = _number(key, value)
    if not x.is_integer():
        raise ScenarioError(f"{key}: not an integer: {value!r}")
    return int(x)


def scenario_from_mapping(entries: dict[str, str], overrides: dict | None = None) -> Scenario:
    allowed = set(REQUIRED) | set(OPTIONAL) | set(CONTROL_KEYS)
    unknown = sorted(set(entries) - allowed)
    if unknown:
        raise ScenarioError(f"unknown key(s): {', '.join(unknown)}")
    if "p0" in entries and "exec_risk_strategy" in entries:
        raise ScenarioError("p0 and exec_risk_strategy are mutually exclusive")
    raw: dict[str, object] = {}
    for key in REQUIRED + OPTIONAL:
        if key in entries:
            raw[key] = entries[key] if key == "terminal_penalty" else _number(key, entries[key])
    p0 = None
    if "p0" in entries:
        p0 = _number("p0", entries["p0"])
        if "initial_shares" in raw and "horizon" in raw:
            raw["exec_risk_strategy"] = phi0_from_p0(p0, raw["initial_shares"], raw["horizon"])  # type: ignore[arg-type]
    try:
        params = build_params(raw)
    except ParameterError as exc:
        raise ScenarioError(str(exc)) from None
    overrides = overrides or {}
    policies = tuple(s.strip() for s in entries.get("policy", "penalized").split(",") if s.strip())
    if not policies:
        raise ScenarioError("policy: at least one policy name required")
    n_paths = overrides.get("n_paths")
    if n_paths is None:
        n_paths = _integer("n_paths", entries.get("n_paths", "100"))
    n_steps = overrides.get("n_steps")
    if n_steps is None:
        n_steps = _integer("n_steps", entries.get("n_steps", "1000"))
    seed = overrides.get("seed")
    if seed is None:
        seed = _integer("seed", entries.get("seed", "0"))
    scenario = Scenario(
        params=params,
        policies=policies,
        n_paths=int(n_paths),
        n_steps=int(n_steps),
        seed=int(seed),
        p0=p0,
        out=overrides.get("out") or entries.get("out"),
    )
    try:
        scenario.plan()
        scenario.policy_objects()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return scenario


def bundled_scenario_path(name: str) -> Path:
    stem = name[:-4] if name.endswith(".cfg") else name
    return Path(str(resources.files("execrisk") / "scenarios" / f"{stem}.cfg"))


def resolve_scenario(path_or_name: str) -> Path:
    path = Path(path_or_name)
    if path.is_file():
        return path
    bundled = bundled_scenario_path(path_or_name)
    if bundled.is_file():
        return bundled
    raise ScenarioError(f"scenario not found: {path_or_name!r}")


def load_scenario(path_or_name: str, overrides: dict | None = None) -> Scenario:
    path = resolve_scenario(path_or_name)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    try:
        return scenario_from_mapping(parse_scenario_text(text), overrides)
    except ParameterError as exc:
        raise ScenarioError(str(exc)) from None


def fmt(x: float) -> str:
    return FLOAT_FMT % x


def _write_table(path: Path, header: list[str], columns: list[np.ndarray], int_cols: int) -> None:
    fmts = ["%d"] * int_cols + [FLOAT_FMT] * (len(columns) - int_cols)
    table = np.column_stack(columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, table, fmt=fmts, delimiter=",")


def _grid_columns(ens) -> list[np.ndarray]:
    P, K = ens.y.shape
    path = np.repeat(ens.plan.path_indices.astype(np.int64), K)
    k = np.tile(np.arange(K, dtype=np.int64), P)
    t = np.tile(ens.t, P)
    return [path, k, t]


def write_ensemble_csv(ens, path: Path) -> None:
    cols = _grid_columns(ens) + [a.ravel() for a in (ens.y, ens.v, ens.H, ens.S0, ens.S)]
    _write_table(Path(path), ["path", "k", "t", "y", "v", "H", "S0", "S"], cols, 2)


def compare_columns(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    labels = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        labels.append(name if seen[name] == 1 else f"{name}_{seen[name]}")
    return labels


def write_compare_csv(ensembles: list, names: list[str], path: Path) -> None:
    labels = compare_columns(names)
    header = ["path", "k", "t"]
    cols = _grid_columns(ensembles[0])
    for label, ens in zip(labels, ensembles):
        header += [f"y_{label}", f"v_{label}"]
        cols += [ens.y.ravel(), ens.v.ravel()]
    _write_table(Path(path), header, cols, 2)


def sidecar(ens, extra: dict | None = None) -> dict:
    doc = {
        "format": SIDECAR_FORMAT,
        "params": ens.params.to_dict(),
        "policy": ens.policy.descriptor(),
        "seed": ens.plan.seed,
        "n_paths": ens.plan.n_paths,
        "path_offset": ens.plan.path_offset,
        "grid": {"t0": 0.0, "horizon": ens.params.horizon, "n_steps": ens.plan.n_steps, "dt": ens.dt},
        "backend": ens.backend,
    }
    if extra:
        doc.update(extra)
    return doc


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def loads_sidecar(text: str) -> dict:
    """Parse a sidecar and rebuild its parameter set (validated)."""
    doc = json.loads(text)
    if doc.get("format") != SIDECAR_FORMAT:
        raise ScenarioError(f"not an ensemble sidecar: format={doc.get('format')!r}")
    doc["model_params"] = build_params(doc["params"])
    return doc


def sidecar_roundtrip(text: str) -> str:
    doc = loads_sidecar(text)
    params = doc.pop("model_params")
    doc["params"] = params.to_dict()
    return dumps_json(doc)


def write_path_functionals(values: dict[str, np.ndarray], path_indices: np.ndarray, path: Path) -> None:
    names = list(values)
    cols = [np.asarray(path_indices, dtype=np.int64)] + [values[n] for n in names]
    _write_table(Path(path), ["path"] + names, cols, 1)


def report_json(report_dict: dict) -> str:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return repr(x)
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, list):
            return [clean(v) for v in x]
        return x

    return dumps_json(clean(report_dict))
