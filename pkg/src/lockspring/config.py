"""Toolkit configuration file.

Flat INI sections of ``key = value`` lines.  Every physical key carries its
unit in the name.  Missing sections and keys take the prototype defaults;
unknown sections and keys are errors.  Full-line comments start with ``#``
or ``;``.  Bounds in ``[optimizer]`` are written ``lo, hi``.

Grammar::

    file     := (blank | comment | section | entry)*
    section  := "[" name "]"
    entry    := key ("=" | ":") value
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

from lockspring.analysis import AnalysisConfig
from lockspring.clutch_model import CapstanGeometry, SolenoidSpec
from lockspring.errors import ConfigError, LockSpringError, ValidationError
from lockspring.optimizer import (
    Bounds,
    DesignConstraints,
    MassModel,
    Objective,
    ObjectiveSpec,
)
from lockspring.spring_mechanism import CableSpec, MassBudget, SpringSpec, TensionerSpec
from lockspring.workloop import (
    DEFAULT_CONTACT_THRESHOLD_N,
    DEFAULT_SAMPLE_RATE_HZ,
    LockLossModel,
    Protocol,
)

PROTOTYPE_CLUTCH_MASS_KG = 0.62  # 1.94 kg total minus 1.32 kg spring side


@dataclass(frozen=True)
class SimulationSettings:
    protocol: Protocol = field(default_factory=Protocol.accumulation)
    sample_rate_Hz: float = DEFAULT_SAMPLE_RATE_HZ
    contact_threshold_N: float = DEFAULT_CONTACT_THRESHOLD_N

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sample_rate_Hz) and self.sample_rate_Hz > 0):
            raise ValidationError("sample_rate_Hz", "must be > 0")
        if not (math.isfinite(self.contact_threshold_N) and self.contact_threshold_N >= 0):
            raise ValidationError("contact_threshold_N", "must be >= 0")


@dataclass(frozen=True)
class OptimizerSettings:
    pulley_radius_mm: Bounds = Bounds(8.0, 16.0)
    drum_radius_mm: Bounds = Bounds(10.0, 30.0)
    drum_length_mm: Bounds = Bounds(10.0, 40.0)
    wire_diameter_mm: Bounds = Bounds(1.0, 4.0)
    friction_coeff: Bounds = Bounds(0.4, 0.4)
    max_envelope_mm: float = 80.0
    required_holding_force_N: float = 1000.0
    mass_model: MassModel = field(default_factory=MassModel)
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    grid_budget: int = 4096
    refine: bool = True
    refine_top_k: int = 5

    def __post_init__(self) -> None:
        if not (isinstance(self.grid_budget, int) and self.grid_budget >= 1):
            raise ValidationError("grid_budget", "must be an integer >= 1")
        if not (isinstance(self.refine_top_k, int) and self.refine_top_k >= 0):
            raise ValidationError("refine_top_k", "must be an integer >= 0")

    def constraints(self, spring: SpringSpec, cable: CableSpec, solenoid: SolenoidSpec) -> DesignConstraints:
        return DesignConstraints(
            pulley_radius_mm=self.pulley_radius_mm,
            drum_radius_mm=self.drum_radius_mm,
            drum_length_mm=self.drum_length_mm,
            wire_diameter_mm=self.wire_diameter_mm,
            friction_coeff=self.friction_coeff,
            max_envelope_mm=self.max_envelope_mm,
            required_holding_force_N=self.required_holding_force_N,
            cable=cable,
            solenoid=solenoid,
            spring=spring,
            mass_model=self.mass_model,
        )


@dataclass(frozen=True)
class ToolkitConfig:
    spring: SpringSpec = field(default_factory=SpringSpec)
    cable: CableSpec = field(default_factory=CableSpec)
    tensioner: TensionerSpec = field(default_factory=TensionerSpec)
    solenoid: SolenoidSpec = field(default_factory=SolenoidSpec)
    clutch: CapstanGeometry = field(default_factory=CapstanGeometry)
    clutch_mass_kg: float = PROTOTYPE_CLUTCH_MASS_KG
    loss_model: LockLossModel = field(default_factory=LockLossModel)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    @property
    def mass_budget(self) -> MassBudget:
        return MassBudget(self.spring.mass_kg, self.clutch_mass_kg)

    @property
    def constraints(self) -> DesignConstraints:
        return self.optimizer.constraints(self.spring, self.cable, self.solenoid)

    def to_dict(self) -> dict[str, dict[str, Any]]:
        """Section -> key -> JSON-friendly value."""
        out: dict[str, dict[str, Any]] = {}
        for section, keys in SCHEMA.items():
            out[section] = {key: _KINDS[kind][2](get(self)) for key, (kind, get, _) in keys.items()}
        return out

    def to_ini(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key, (kind, get, _) in keys.items():
                lines.append(f"{key} = {_KINDS[kind][1](get(self))}")
            lines.append("")
        return "\n".join(lines)


# ---- value kinds: (parse text, format for INI, format for JSON) ----

def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not a finite number")
    return v


def _parse_opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else _parse_float(text)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_bounds(text: str) -> Bounds:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) == 1:
        v = _parse_float(parts[0])
        return Bounds(v, v)
    if len(parts) != 2:
        raise ValueError("expected 'lo, hi'")
    return Bounds(_parse_float(parts[0]), _parse_float(parts[1]))


def _parse_objective(text: str) -> Objective:
    return Objective(text.strip())


def _fmt_float(v: float) -> str:
    return repr(float(v))


_KINDS: dict[str, tuple[Callable[[str], Any], Callable[[Any], str], Callable[[Any], Any]]] = {
    "float": (_parse_float, _fmt_float, float),
    "opt_float": (_parse_opt_float, lambda v: "none" if v is None else _fmt_float(v), lambda v: v),
    "bool": (_parse_bool, lambda v: "true" if v else "false", bool),
    "int": (_parse_int, str, int),
    "bounds": (_parse_bounds, lambda b: f"{_fmt_float(b.lo)}, {_fmt_float(b.hi)}", lambda b: [b.lo, b.hi]),
    "phases": (Protocol.from_text, lambda p: p.to_text(), lambda p: p.to_text()),
    "objective": (_parse_objective, lambda o: o.value, lambda o: o.value),
}


def _attr(*path: str) -> Callable[[ToolkitConfig], Any]:
    def get(cfg: ToolkitConfig) -> Any:
        obj: Any = cfg
        for p in path:
            obj = getattr(obj, p)
        return obj
    return get


def _section(obj_attr: str, spec: dict[str, str]) -> dict[str, tuple[str, Callable, tuple[str, ...]]]:
    return {key: (kind, _attr(obj_attr, key), (obj_attr, key)) for key, kind in spec.items()}


SCHEMA: dict[str, dict[str, tuple[str, Callable, tuple[str, ...]]]] = {
    "spring": _section("spring", {
        "stiffness_N_per_mm": "float", "free_length_mm": "float",
        "max_deflection_mm": "float", "mass_kg": "float",
    }),
    "cable": _section("cable", {
        "breaking_strength_N": "float", "elongation_fraction_at_break": "float",
        "routed_length_mm": "float", "safety_factor": "float",
    }),
    "tensioner": _section("tensioner", {"torque_mNm": "float"}),
    "solenoid": _section("solenoid", {
        "pretension_force_N": "float", "drive_voltage_V": "float",
        "drive_current_A": "float", "actuation_time_s": "float",
    }),
    "clutch": {
        **_section("clutch", {
            "pulley_radius_mm": "float", "drum_radius_mm": "float", "drum_length_mm": "float",
            "wire_diameter_mm": "float", "friction_coeff": "float", "wrap_count_override": "opt_float",
        }),
        "clutch_mass_kg": ("float", _attr("clutch_mass_kg"), ("clutch_mass_kg",)),
    },
    "loss_model": _section("loss_model", {
        "engagement_slip_mm": "float", "include_cable_compliance": "bool",
    }),
    "protocol": {
        "phases": ("phases", _attr("simulation", "protocol"), ("simulation", "protocol")),
        "crosshead_speed_mm_per_s": (
            "float", _attr("simulation", "protocol", "crosshead_speed_mm_per_s"),
            ("simulation", "protocol", "crosshead_speed_mm_per_s"),
        ),
        **_section("simulation", {"sample_rate_Hz": "float", "contact_threshold_N": "float"}),
    },
    "analysis": _section("analysis", {
        "slope_threshold_multiple": "float", "slope_window_samples": "int",
        "nominal_stiffness_N_per_mm": "opt_float", "deflection_tolerance_mm": "float",
    }),
    "optimizer": {
        **_section("optimizer", {
            "pulley_radius_mm": "bounds", "drum_radius_mm": "bounds", "drum_length_mm": "bounds",
            "wire_diameter_mm": "bounds", "friction_coeff": "bounds",
            "max_envelope_mm": "float", "required_holding_force_N": "float",
            "grid_budget": "int", "refine": "bool", "refine_top_k": "int",
        }),
        **{key: ("float", _attr("optimizer", "mass_model", key), ("optimizer", "mass_model", key))
           for key in ("wire_density_kg_per_mm3", "drum_density_kg_per_mm3",
                       "housing_density_kg_per_mm3", "drum_wall_mm", "guide_wall_mm",
                       "overhead_mass_kg")},
        "objective": ("objective", _attr("optimizer", "objective", "kind"), ("optimizer", "objective", "kind")),
        "lambda_weight": ("float", _attr("optimizer", "objective", "lambda_weight"),
                          ("optimizer", "objective", "lambda_weight")),
        "rho_weight": ("float", _attr("optimizer", "objective", "rho_weight"),
                       ("optimizer", "objective", "rho_weight")),
    },
}


def _to_draft(obj: Any) -> Any:
    """Nested-dict copy of a frozen dataclass tree, so keys can be overridden before validation."""
    if hasattr(obj, "__dataclass_fields__"):
        return {"__type__": type(obj), **{f.name: _to_draft(getattr(obj, f.name)) for f in fields(obj)}}
    return obj


def _set_path(draft: dict, path: tuple[str, ...], value: Any) -> None:
    for name in path[:-1]:
        draft = draft[name]
    draft[path[-1]] = value


def _rebuild(draft: Any) -> Any:
    if isinstance(draft, dict) and "__type__" in draft:
        kwargs = {k: _rebuild(v) for k, v in draft.items() if k != "__type__"}
        return draft["__type__"](**kwargs)
    return draft


# config attribute -> section whose keys feed it
_OWNER = {
    "spring": "spring", "cable": "cable", "tensioner": "tensioner", "solenoid": "solenoid",
    "clutch": "clutch", "clutch_mass_kg": "clutch", "loss_model": "loss_model",
    "simulation": "protocol", "analysis": "analysis", "optimizer": "optimizer",
}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """(section, key) -> 1-based line; (section, "") is the header line."""
    out: dict[tuple[str, str], int] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, ""), n)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip()), n)
    return out


def loads(text: str, path: str | None = None) -> ToolkitConfig:
    """Parse config text; errors carry ``path`` and line number."""
    parser = configparser.ConfigParser(
        interpolation=None, strict=True, comment_prefixes=("#", ";"),
        inline_comment_prefixes=None, default_section="__none__",
    )
    parser.optionxform = str  # keys are case-sensitive (unit suffixes)
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("entry before any [section] header", path, e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", path, e.lineno) from None
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", path, e.lineno) from None
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigError(f"syntax error: {line.strip()}", path, lineno) from None
    lines = _key_lines(text)

    draft = _to_draft(ToolkitConfig())
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", path, lines.get((section, "")))
        for key, raw in parser.items(section, raw=True):
            line = lines.get((section, key))
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", path, line)
            kind, _, target = SCHEMA[section][key]
            try:
                value = _to_draft(_KINDS[kind][0](raw))
            except (ValueError, LockSpringError) as e:
                raise ConfigError(f"[{section}] {key}: invalid value {raw.strip()!r} ({e})", path, line) from None
            if kind == "phases":
                # the speed may have been set already; phases must not reset it
                value["crosshead_speed_mm_per_s"] = draft["simulation"]["protocol"]["crosshead_speed_mm_per_s"]
            _set_path(draft, target, value)

    built = {}
    for attr, section in _OWNER.items():
        try:
            built[attr] = _rebuild(draft[attr])
        except ValidationError as e:
            key = e.field if e.field in SCHEMA[section] else None
            # a cross-field error may name a key the file never set
            line = lines.get((section, key)) if key else None
            line = line or lines.get((section, ""))
            reason = str(e).split(": ", 1)[-1]
            raise ConfigError(f"[{section}] {e.field}: {reason}", path, line) from None
    return ToolkitConfig(**built)


def parse_config(path: str | Path | None) -> ToolkitConfig:
    """Read and validate a config file; ``None`` gives the prototype defaults."""
    if path is None:
        return ToolkitConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(p)) from None
    return loads(text, str(p))


def dumps(config: ToolkitConfig) -> str:
    return config.to_ini()

