"""Scenario files: a closed YAML schema with one section per concern."""

from __future__ import annotations

import hashlib
import json
import math
import re
from pathlib import Path
from typing import Annotated, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

SCHEMA_VERSION = 1
SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"

EXPERIMENT_KINDS = (
    "run",
    "dispersion-test",
    "resonance-scan",
    "multiplier-fit",
    "normalform-check",
    "energy-drift",
    "madelung-compare",
    "scatter-probe",
)


class ScenarioError(ValueError):
    """Parse or validation failure, with file/line/field context in the message."""


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


_PI_RE = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


def parse_length(value) -> float:
    """Numbers pass through; strings like '64pi' or '64*pi' are multiplied by pi."""
    if isinstance(value, (int, float)):
        return float(value)
    m = _PI_RE.match(str(value))
    if not m:
        raise ValueError(f"cannot parse length {value!r}")
    coef = m.group(1)
    return (float(coef) if coef else 1.0) * math.pi


class ModelSpec(Strict):
    capillarity: Literal["quantum", "constant"] = "quantum"
    pressure: Literal["power"] = "power"
    rho_c: float = 1.0
    kappa: float = 1.0
    K0: float = 1.0
    c: float = 2.0
    gamma: float = 1.0
    admissible: tuple[float, float] = (0.5, 2.0)


class GridSpec(Strict):
    dim: Literal[1, 2, 3] = 1
    n: int = 256
    length: float = 32.0 * math.pi

    @field_validator("length", mode="before")
    @classmethod
    def _length(cls, v):
        return parse_length(v)


class InitialSpec(Strict):
    """
    profile gaussian / wave_packet: envelope exp(-|x - center|^2 / (2 width^2)).
    variables "analytic" sets psi = amplitude * envelope * e^{i carrier x_1}.
    variables "fluid" sets rho = rho_c (1 + amplitude * envelope * cos(carrier x_1)) and
    phi = potential_ratio * amplitude * envelope' * sin(carrier x_1) (cos when carrier = 0),
    envelope' centred at potential_center.
    random_band_limited draws coefficients for |xi| <= band from `seed`.
    """

    profile: Literal["gaussian", "wave_packet", "random_band_limited"] = "gaussian"
    variables: Literal["analytic", "fluid"] = "fluid"
    amplitude: float = 1e-3
    width: float = 1.5
    carrier: float = 0.0
    center: tuple[float, ...] | None = None
    potential_ratio: float = 1.0
    potential_center: tuple[float, ...] | None = None
    band: float = 1.0
    seed: int | None = None

    @model_validator(mode="after")
    def _checks(self):
        if self.profile == "random_band_limited" and self.seed is None:
            raise ValueError("random_band_limited data needs a seed")
        if self.profile == "gaussian" and self.carrier != 0.0:
            raise ValueError("gaussian data has no carrier; use wave_packet")
        if self.width <= 0:
            raise ValueError("width must be positive")
        return self


class IntegratorSpec(Strict):
    scheme: Literal["strang_splitting", "exponential_rk4"] = "strang_splitting"
    dt: float = 0.01
    dealias_fraction: float = 2.0 / 3.0
    amplitude_guard: float = 0.25


class RunParams(Strict):
    kind: Literal["run"]
    t_end: float = 10.0
    snapshots: int = 11
    norms: list[str] = ["L2", "Linf", "H1"]
    linear: bool = False
    x_norm: bool = True
    x_norm_p: float | None = None


class DispersionParams(Strict):
    kind: Literal["dispersion-test"]
    norms: list[str] = ["Linf"]
    snapshots: int = 10
    t_min: float = 5.0
    velocity_threshold: float = 1e-2
    tolerance: float = 0.07
    unitarity_tolerance: float = 0.01


class ResonanceParams(Strict):
    kind: Literal["resonance-scan"]
    samples: int = 2**14
    seed: int = 1
    radii: list[float] = [1e-3, 1.9e-3, 3.7e-3, 7.2e-3, 1.39e-2, 2.68e-2, 5.18e-2, 1e-1]
    sum_radii: list[float] = [1e-1, 1e-2, 1e-3]
    space_radii: list[float] = [0.5, 1.0, 2.0]
    eta_box: float = 2.0
    slope_target: float = 1.0
    slope_tolerance: float = 0.1
    parallel_epsilon: float = 0.1
    parallel_eta: float = 0.01
    parallel_tolerance: float = 0.05
    phase_value_tolerance: float = 1e-6


class SymbolSpec(Strict):
    kind: Literal["unit", "B3", "B1", "B2"]
    phase: str = "+-"
    region: Literal["block", "cone", "off"] = "block"
    bj: Literal["bound", "normal_form"] = "bound"
    alpha: float = 0.0


class LadderSpec(Strict):
    """Block sizes are given as base-2 exponents: a: -6 means a = 2^-6."""

    name: str
    symbol: SymbolSpec
    vary: Literal["a", "b", "c", "M"]
    exponents: list[float]
    fixed: dict[str, float] = {}
    tie: str = "ac"
    regime: Literal["small", "large"] = "small"
    check: Literal["l", "M"] = "l"
    tolerance: float = 0.15

    @field_validator("exponents")
    @classmethod
    def _enough(cls, v):
        if len(v) < 4:
            raise ValueError("a ladder needs at least 4 blocks")
        return v


class MultiplierParams(Strict):
    kind: Literal["multiplier-fit"]
    s: float = 1.0
    xi_samples: int = 5
    radial_points: int = 200
    polar_points: tuple[int, int, int] = (300, 300, 300)
    ladders: list[LadderSpec]


class NormalFormCheckParams(Strict):
    kind: Literal["normalform-check"]
    checks: list[Literal["identity", "gradient_structure", "orders", "asymptotic"]] = ["identity"]
    identity_samples: int = 100_000
    identity_radius: float = 4.0
    alpha_range: tuple[float, float] = (-2.0, 3.0)
    identity_tolerance: float = 1e-12
    seed: int = 0
    t_end: float = 2.0
    snapshots: int = 5
    zero_mode_tolerance: float = 1e-12
    zero_mode_ratio: float = 1e3
    amplitudes: list[float] = [1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4]
    quadratic_slope_tolerance: float = 0.05
    cubic_slope_tolerance: float = 0.1
    asymptotic_snapshots: int = 14
    asymptotic_t_min: float = 5.0


class EnergyParams(Strict):
    kind: Literal["energy-drift"]
    t_end: float = 10.0
    snapshots: int = 11
    linear_energy_tolerance: float = 1e-12
    mass_tolerance_per_time: float = 1e-8
    energy_level: int = 0
    amplitudes: list[float] = [1e-3, 1e-4]
    ratio_tolerance: float = 1e-10


class MadelungParams(Strict):
    kind: Literal["madelung-compare"]
    t_end: float = 5.0
    tolerance: float = 1e-4


class ScatterParams(Strict):
    kind: Literal["scatter-probe"]
    start_min: float = 1.0
    start_max: float | None = None
    starts: int = 9
    s: float = 0.0
    rate_target: float = -0.4
    best_effort: bool = True
    min_fit_points: int = 4


ExperimentSpec = Annotated[
    Union[
        RunParams,
        DispersionParams,
        ResonanceParams,
        MultiplierParams,
        NormalFormCheckParams,
        EnergyParams,
        MadelungParams,
        ScatterParams,
    ],
    Field(discriminator="kind"),
]


class Scenario(Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str
    description: str = ""
    model: ModelSpec = ModelSpec()
    grid: GridSpec = GridSpec()
    initial: InitialSpec = InitialSpec()
    integrator: IntegratorSpec = IntegratorSpec()
    experiment: ExperimentSpec

    @field_validator("name")
    @classmethod
    def _name(cls, v):
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", v):
            raise ValueError("name may contain letters, digits, '_', '-' and '.' only")
        return v

    def canonical(self) -> dict:
        return self.model_dump(mode="json")

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_seed(self, seed: int) -> "Scenario":
        data = self.canonical()
        data["initial"]["seed"] = seed
        if "seed" in data["experiment"]:
            data["experiment"]["seed"] = seed
        return Scenario.model_validate(data)


# --- loading -----------------------------------------------------------------------


def resolve_path(path: str | Path) -> Path:
    """'builtin:name' refers to a shipped scenario."""
    text = str(path)
    if text.startswith("builtin:"):
        stem = text.split(":", 1)[1]
        candidate = SCENARIO_DIR / (stem if stem.endswith(".yaml") else stem + ".yaml")
        if not candidate.exists():
            raise ScenarioError(f"no shipped scenario named {stem!r}")
        return candidate
    return Path(text)


def builtin_scenarios() -> list[Path]:
    return sorted(SCENARIO_DIR.glob("*.yaml"))


def _node_line(root: yaml.Node | None, loc: tuple) -> int | None:
    """Line (1-based) of the YAML node addressed by a pydantic error location."""
    node = root
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            if nxt is None:
                return line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ScenarioError(f"{where}: YAML parse error: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: top level must be a mapping")
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = tuple(x for x in err["loc"] if not (isinstance(x, str) and x in EXPERIMENT_KIND_TAGS))
            line = _node_line(root, loc)
            field_path = ".".join(str(x) for x in loc) or "<root>"
            lines.append(f"{source}:{line if line else '?'}: {field_path}: {err['msg']}")
        raise ScenarioError("\n".join(lines)) from exc


EXPERIMENT_KIND_TAGS = set(EXPERIMENT_KINDS)


def load_scenario(path: str | Path) -> Scenario:
    p = resolve_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {p}: {exc}") from exc
    return parse_scenario(text, str(p))
