"""
Command line entry point.

    ekdisp run --scenario builtin:dispersion_1d --out results/
    ekdisp validate --scenario my.yaml
    ekdisp list

Exit codes: 0 all assertions passed, 1 an assertion failed, 2 usage or
configuration error, 3 runtime error.  Flags may also be set through
EKDISP_SCENARIO, EKDISP_OUT, EKDISP_THREADS and EKDISP_SEED_OVERRIDE.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as dg
from . import spectral as sp
from .experiments import DESCRIPTIONS, RUNNERS, ExperimentResult, build_grid, build_params, initial_state
from .model import AdmissibilityError, StabilityError
from .propagator import SolverError
from .scenario import EXPERIMENT_KINDS, Scenario, ScenarioError, builtin_scenarios, load_scenario

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

ENV = {
    "scenario": "EKDISP_SCENARIO",
    "out": "EKDISP_OUT",
    "threads": "EKDISP_THREADS",
    "seed_override": "EKDISP_SEED_OVERRIDE",
}


@dataclass
class RunManifest:
    scenario: str
    scenario_hash: str
    version: str
    experiment: str
    wall_clock_seconds: float
    files: list[str]
    assertions: list[dict]
    status: str
    resolved_scenario: dict
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "scenario_hash": self.scenario_hash,
            "version": self.version,
            "experiment": self.experiment,
            "wall_clock_seconds": self.wall_clock_seconds,
            "files": self.files,
            "assertions": self.assertions,
            "status": self.status,
            "resolved_scenario": self.resolved_scenario,
            "notes": self.notes,
        }


# --- output -------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def emit(result: ExperimentResult, scn: Scenario, out_dir: Path, started: float, source: str) -> RunManifest:
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for table in result.tables:
        name = f"{scn.name}_{table.name}.csv"
        write_csv(out_dir / name, table.columns, table.rows)
        files.append(name)
    for name, draw in result.figures:
        fname = f"{scn.name}_{name}"
        draw(out_dir / fname)
        files.append(fname)
    hard = [a for a in result.assertions if a.severity == "error"]
    status = "pass" if all(a.passed for a in hard) else "fail"
    manifest = RunManifest(
        scenario=source,
        scenario_hash=scn.digest(),
        version=__version__,
        experiment=scn.experiment.kind,
        wall_clock_seconds=time.perf_counter() - started,
        files=files + [f"{scn.name}_manifest.json"],
        assertions=[a.as_dict() for a in result.assertions],
        status=status,
        resolved_scenario=scn.canonical(),
        notes=result.notes,
    )
    (out_dir / f"{scn.name}_manifest.json").write_text(json.dumps(_jsonable(manifest.as_dict()), indent=2) + "\n")
    return manifest


# --- operations -------------------------------------------------------------------------


def list_experiments() -> str:
    lines = ["experiment kinds:"]
    width = max(len(k) for k in EXPERIMENT_KINDS)
    for kind in EXPERIMENT_KINDS:
        lines.append(f"  {kind:<{width}}  {DESCRIPTIONS[kind]}")
    lines.append("")
    lines.append("shipped scenarios (use builtin:<name>):")
    for p in builtin_scenarios():
        lines.append(f"  {p.stem}")
    return "\n".join(lines)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def render(self) -> str:
        out = [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]
        return "\n".join(out) if out else "ok"


def _horizon(scn: Scenario) -> float | None:
    ex = scn.experiment
    for attr in ("t_end",):
        if hasattr(ex, attr):
            return float(getattr(ex, attr))
    return None


def physical_checks(scn: Scenario) -> ValidationReport:
    """Stability condition, amplitude guard and wrap-around window."""
    rep = ValidationReport()
    try:
        params = build_params(scn)
    except StabilityError as exc:
        rep.errors.append(str(exc))
        return rep
    except ValueError as exc:
        rep.errors.append(f"model: {exc}")
        return rep
    if scn.experiment.kind in ("resonance-scan", "multiplier-fit"):
        return rep
    try:
        grid = build_grid(scn)
        psi0 = initial_state(scn, params, grid)
    except (AdmissibilityError, ValueError) as exc:
        rep.errors.append(f"initial data: {exc}")
        return rep
    l_max = float(np.max(np.abs(np.imag(sp.ifft(grid, psi0.values)))))
    if l_max > scn.integrator.amplitude_guard:
        rep.errors.append(f"initial max|l| = {l_max:.4g} exceeds the amplitude guard {scn.integrator.amplitude_guard}")
    limit = dg.wraparound_limit(grid, psi0)
    if scn.integrator.dt > limit:
        rep.warnings.append(f"dt = {scn.integrator.dt} exceeds the wrap-around window {limit:.4g}")
    horizon = _horizon(scn)
    if horizon is not None and horizon > limit:
        rep.warnings.append(
            f"t_end = {horizon} exceeds the wrap-around window L/(2v) = {limit:.4g}; periodic images interact"
        )
    return rep


def validate(path: str) -> ValidationReport:
    try:
        scn = load_scenario(path)
    except ScenarioError as exc:
        return ValidationReport(errors=[str(exc)])
    return physical_checks(scn)


def run_scenario(
    path: str,
    out_dir: str | Path = "results",
    threads: int = 1,
    seed_override: int | None = None,
) -> RunManifest:
    scn = load_scenario(path)
    if seed_override is not None:
        scn = scn.with_seed(seed_override)
    sp.set_fft_workers(threads)
    started = time.perf_counter()
    result = RUNNERS[scn.experiment.kind](scn, threads)
    return emit(result, scn, Path(out_dir), started, str(path))


# --- argument handling ------------------------------------------------------------------------


def _env_default(key: str, cast=str):
    raw = os.environ.get(ENV[key])
    if raw is None or raw == "":
        return None
    return cast(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ekdisp", description="Euler-Korteweg dispersive experiments")
    parser.add_argument("--version", action="version", version=f"ekdisp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="scenario file or builtin:<name>")
        if name == "run":
            p.add_argument("--out", help="output directory (default: results)")
            p.add_argument("--threads", type=int, help="FFT workers and parallel ladder scans")
            p.add_argument("--seed-override", type=int, help="replace every seed in the scenario")
    sub.add_parser("list")
    return parser


def _print_manifest(m: RunManifest) -> None:
    for a in m.assertions:
        tag = "PASS" if a["passed"] else ("WARN" if a["severity"] == "warning" else "FAIL")
        print(f"[{tag}] {a['name']}: {a['value']:.6g} (target {a['target']})")
    print(f"status: {m.status}  ({m.wall_clock_seconds:.1f} s)  files: {', '.join(m.files)}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    if args.command == "list":
        print(list_experiments())
        return EXIT_PASS
    try:
        scenario = args.scenario or _env_default("scenario")
        if not scenario:
            print("error: --scenario is required", file=sys.stderr)
            return EXIT_USAGE
        if args.command == "validate":
            rep = validate(scenario)
            print(rep.render())
            return EXIT_PASS if rep.ok else EXIT_USAGE
        out = args.out or _env_default("out") or "results"
        threads = args.threads if args.threads is not None else (_env_default("threads", int) or 1)
        seed = args.seed_override if args.seed_override is not None else _env_default("seed_override", int)
        if threads < 1:
            print("error: --threads must be at least 1", file=sys.stderr)
            return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = run_scenario(scenario, out, threads, seed)
    except (ScenarioError, StabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        snap = Path(out) / "failure_snapshot.npy"
        if exc.snapshot is not None:
            Path(out).mkdir(parents=True, exist_ok=True)
            np.save(snap, exc.snapshot)
        print(f"runtime error: {exc}; last state saved to {snap}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        traceback.print_exc()
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _print_manifest(manifest)
    return EXIT_PASS if manifest.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
