"""
Acceptance criteria, one test per criterion (criterion 6 is split so the
unattainable parallel-resonance check fails on its own).  Every test runs a
shipped scenario through the same path as the command line and prints one
PASS/FAIL/WARN line; the lines are repeated in the terminal summary.
"""

import warnings
from pathlib import Path

import pytest

from ekdisp import cli
from ekdisp.scenario import builtin_scenarios


@pytest.fixture(scope="session")
def scenario_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    cache: dict[str, tuple[cli.RunManifest, Path]] = {}

    def run(name: str):
        if name not in cache:
            out = root / "first" / name
            cache[name] = (cli.run_scenario(f"builtin:{name}", out), out)
        return cache[name]

    run.root = root
    return run


def assertions(manifest, prefix=""):
    return {a["name"]: a for a in manifest.assertions if a["name"].startswith(prefix)}


def summary(items):
    return "; ".join(f"{a['name']}={a['value']:.6g} ({a['target']})" for a in items)


def test_criterion_01_linear_dispersion_rates(scenario_runs, record_criterion):
    details, ok = [], True
    for name, dim, budget in (("dispersion_1d", 1, 60.0), ("dispersion_2d", 2, 600.0)):
        manifest, _ = scenario_runs(name)
        linf = assertions(manifest)["decay_slope_Linf"]
        passed = linf["passed"] and abs(linf["value"] + dim / 2) <= 0.07 and manifest.wall_clock_seconds <= budget
        ok = ok and passed
        details.append(f"d={dim} slope {linf['value']:.4f} in {manifest.wall_clock_seconds:.1f}s")
    record_criterion(1, "Linf decay slope -d/2 +- 0.07", ok, ", ".join(details))
    assert ok


def test_criterion_02_unitarity_and_mass(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("conservation")
    found = assertions(manifest)
    items = [found["linear_energy_drift"], found["mass_drift_per_time"]]
    ok = all(a["passed"] for a in items)
    ok = ok and items[0]["value"] <= 1e-12 and items[1]["value"] <= 1e-8
    record_criterion(2, "linear energy and mass conservation", ok, summary(items))
    assert ok


def test_criterion_03_symbol_identity(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("normalform_identity")
    item = assertions(manifest)["symbol_identity_max_residual"]
    ok = item["passed"] and item["value"] <= 1e-12
    record_criterion(3, "normal-form symbol identity", ok, summary([item]))
    assert ok


def test_criterion_04_gradient_structure(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("normalform_gradient")
    found = assertions(manifest, "zero_mode")
    ok = all(a["passed"] for a in found.values())
    ok = ok and found["zero_mode_transformed"]["value"] <= 1e-12 and found["zero_mode_ratio"]["value"] >= 1e3
    record_criterion(4, "zero mean after normal form", ok, summary(found.values()))
    assert ok


def test_criterion_05_order_checks(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("normalform_orders")
    found = assertions(manifest)
    n_ord, r_ord = found["nonlinearity_order"], found["remainder_order"]
    ok = abs(n_ord["value"] - 2.0) <= 0.05 and abs(r_ord["value"] - 3.0) <= 0.1
    record_criterion(5, "quadratic / cubic order slopes", ok, summary([n_ord, r_ord]))
    assert ok


def test_criterion_06_resonant_set_geometry(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("resonance")
    found = assertions(manifest, "omega_")
    ok = len(found) >= 6 and all(a["passed"] for a in found.values())
    value = found["omega_mm_2e1_e1"]["value"]
    ok = ok and abs(value - 1.434877) <= 1e-6
    slope = found["omega_pm_slice_slope"]["value"]
    ok = ok and abs(slope - 1.0) <= 0.1
    record_criterion(6, "resonant-set geometry (phase values and scans)", ok, summary(found.values()))
    assert ok


def test_criterion_06_parallel_resonance_asymptotic(scenario_runs, record_criterion):
    # expected to fail: the reference cubic lacks the (1 - eps) factor, so the
    # relative error tends to eps = 0.1 rather than to zero
    manifest, _ = scenario_runs("resonance")
    item = assertions(manifest)["parallel_resonance_asymptotic"]
    ok = item["value"] <= 0.05
    record_criterion(6, "parallel-resonance asymptotic within 5%", ok, summary([item]))
    assert ok


def test_criterion_07_multiplier_exponents(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("multiplier_fit")
    found = assertions(manifest, "exponent_")
    ok = len(found) >= 5 and all(a["passed"] for a in found.values()) and manifest.wall_clock_seconds <= 600
    record_criterion(7, "multiplier scaling exponents", ok, summary(found.values()))
    assert ok


def test_criterion_08_madelung(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("madelung")
    item = assertions(manifest)["madelung_l2_difference"]
    ok = item["passed"] and item["value"] <= 1e-4 and manifest.wall_clock_seconds <= 60
    record_criterion(8, "Euler-Korteweg vs Gross-Pitaevskii", ok, summary([item]))
    assert ok


@pytest.mark.slow
def test_criterion_09_scattering_surrogate(scenario_runs, record_criterion):
    manifest, _ = scenario_runs("scatter_probe")
    item = assertions(manifest)["cauchy_variation_rate"]
    detail = summary([item]) + f"; full-window rate {manifest.notes.get('full_window_rate', float('nan')):.4g}"
    if item["passed"] and manifest.wall_clock_seconds <= 1800:
        record_criterion(9, "profile Cauchy variation rate", True, detail)
        return
    # best-effort criterion: a miss is reported, not failed
    record_criterion(9, "profile Cauchy variation rate", "warn", detail)
    warnings.warn(f"scattering surrogate missed its target: {detail}")


@pytest.mark.slow
def test_criterion_10_determinism(scenario_runs, record_criterion):
    mismatched, compared = [], 0
    for path in builtin_scenarios():
        name = path.stem
        _, first = scenario_runs(name)
        second = scenario_runs.root / "second" / name
        cli.run_scenario(f"builtin:{name}", second)
        for csv in sorted(first.glob("*.csv")):
            compared += 1
            if csv.read_bytes() != (second / csv.name).read_bytes():
                mismatched.append(csv.name)
    ok = compared > 0 and not mismatched
    detail = f"{compared} CSV files compared over {len(builtin_scenarios())} scenarios"
    if mismatched:
        detail += f"; differing: {', '.join(mismatched)}"
    record_criterion(10, "bit-identical CSVs on repeated runs", ok, detail)
    assert ok
