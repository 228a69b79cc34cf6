"""Clutch geometry design search.

A coarse grid over the geometry bounds is filtered for feasibility, scored,
and the best few grid points are polished by coordinate descent.  Everything
is deterministic; ties are broken lexicographically so the ranking never
depends on evaluation order.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, NamedTuple, Optional

import numpy as np

from lockspring.clutch_model import (
    CapstanGeometry,
    SolenoidSpec,
    locking_force_ratio,
    log_locking_force_ratio,
    max_holding_force,
)
from lockspring.errors import InfeasibleDesignError, ValidationError
from lockspring.spring_mechanism import CableSpec, SpringSpec

# Mass not captured by the wire, drum and guide volumes (housing, bearings,
# solenoid, pulley).  Chosen so the default geometry and densities give the
# prototype's 0.62 kg clutch unit.
DEFAULT_OVERHEAD_MASS_KG = 0.556872

DIMENSIONS = ("pulley_radius_mm", "drum_radius_mm", "drum_length_mm", "wire_diameter_mm", "friction_coeff")


@dataclass(frozen=True)
class Bounds:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValidationError("bounds", f"need finite lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def fixed(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: float, rtol: float = 1e-12) -> bool:
        slack = rtol * max(1.0, abs(self.lo), abs(self.hi))
        return self.lo - slack <= value <= self.hi + slack

    def clamp(self, value: float) -> float:
        return min(max(value, self.lo), self.hi)


@dataclass(frozen=True)
class MassModel:
    """Closed-form volumes of the clutch parts that scale with geometry.

    * wire helix: ``n`` turns of length ``2*pi*(r_d + d_w/2)`` and section ``pi*d_w**2/4``
    * drum: hollow cylinder of outer radius ``r_d``, wall ``drum_wall_mm``, length ``l_d``
    * guide: sleeve of wall ``guide_wall_mm`` around the coil, length ``l_d``

    Densities are in kg/mm^3.
    """

    wire_density_kg_per_mm3: float = 8.0e-6
    drum_density_kg_per_mm3: float = 2.7e-6
    housing_density_kg_per_mm3: float = 1.25e-6
    drum_wall_mm: float = 3.0
    guide_wall_mm: float = 2.0
    overhead_mass_kg: float = DEFAULT_OVERHEAD_MASS_KG

    def __post_init__(self) -> None:
        for name in ("wire_density_kg_per_mm3", "drum_density_kg_per_mm3", "housing_density_kg_per_mm3",
                     "drum_wall_mm", "guide_wall_mm", "overhead_mass_kg"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(name, f"must be >= 0, got {v!r}")

    def component_masses(
        self, drum_radius_mm: float, drum_length_mm: float, wire_diameter_mm: float,
        wrap_count: Optional[float] = None,
    ) -> dict[str, float]:
        r, l, d = drum_radius_mm, drum_length_mm, wire_diameter_mm
        if d > 0:
            n = l / d if wrap_count is None else wrap_count
            wire = n * 2 * math.pi * (r + d / 2) * math.pi * d * d / 4
        else:
            wire = 0.0
        r_in = max(r - self.drum_wall_mm, 0.0)
        drum = math.pi * (r * r - r_in * r_in) * l
        r_coil = r + d
        guide = math.pi * ((r_coil + self.guide_wall_mm) ** 2 - r_coil**2) * l if l > 0 else 0.0
        return {
            "wire_kg": wire * self.wire_density_kg_per_mm3,
            "drum_kg": drum * self.drum_density_kg_per_mm3,
            "guide_kg": guide * self.housing_density_kg_per_mm3,
            "overhead_kg": self.overhead_mass_kg,
        }


def estimate_clutch_mass(geometry: CapstanGeometry, model: MassModel | None = None) -> float:
    """Estimated clutch-unit mass (kg); wraps follow the ``l_d / d_w`` convention."""
    model = model or MassModel()
    parts = model.component_masses(
        geometry.drum_radius_mm, geometry.drum_length_mm, geometry.wire_diameter_mm
    )
    return sum(parts.values())


@dataclass(frozen=True)
class DesignConstraints:
    pulley_radius_mm: Bounds = Bounds(8.0, 16.0)
    drum_radius_mm: Bounds = Bounds(10.0, 30.0)
    drum_length_mm: Bounds = Bounds(10.0, 40.0)
    wire_diameter_mm: Bounds = Bounds(1.0, 4.0)
    friction_coeff: Bounds = Bounds(0.4, 0.4)
    max_envelope_mm: float = 80.0
    required_holding_force_N: float = 1000.0
    cable: CableSpec = field(default_factory=CableSpec)
    solenoid: SolenoidSpec = field(default_factory=SolenoidSpec)
    spring: SpringSpec = field(default_factory=SpringSpec)
    mass_model: MassModel = field(default_factory=MassModel)

    def __post_init__(self) -> None:
        if not self.max_envelope_mm > 0:
            raise ValidationError("max_envelope_mm", "must be > 0")
        if not self.required_holding_force_N > 0:
            raise ValidationError("required_holding_force_N", "must be > 0")
        for name in DIMENSIONS[:4]:
            if getattr(self, name).lo <= 0:
                raise ValidationError(name, "lower bound must be > 0")
        mu = self.friction_coeff
        if mu.lo <= 0 or mu.hi > 2:
            raise ValidationError("friction_coeff", "bounds must lie in (0, 2]")

    def bounds(self) -> dict[str, Bounds]:
        return {name: getattr(self, name) for name in DIMENSIONS}

    @classmethod
    def around(cls, geometry: CapstanGeometry, **kwargs) -> "DesignConstraints":
        """Constraints whose bounds collapse onto ``geometry``."""
        pts = {name: Bounds(getattr(geometry, name), getattr(geometry, name)) for name in DIMENSIONS}
        return cls(**pts, **kwargs)


class Objective(str, Enum):
    MIN_LAMBDA = "min_lambda_F"
    MAX_RHO = "max_rho_E"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class ObjectiveSpec:
    """What to minimize.

    ``weighted`` minimizes ``lambda_weight * log10(lambda_F) - rho_weight * rho_E``;
    the log keeps many orders of magnitude of ``lambda_F`` comparable with a ratio in (0, 1).
    """

    kind: Objective = Objective.MIN_LAMBDA
    lambda_weight: float = 1.0
    rho_weight: float = 10.0

    def score(self, log_lambda: float, rho_E: float) -> float:
        if self.kind is Objective.MIN_LAMBDA:
            return log_lambda
        if self.kind is Objective.MAX_RHO:
            return -rho_E
        return self.lambda_weight * log_lambda / math.log(10) - self.rho_weight * rho_E


class Violation(NamedTuple):
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code} ({self.detail})"


@dataclass(frozen=True)
class DesignCandidate:
    geometry: CapstanGeometry
    lambda_F: float
    log_lambda_F: float
    estimated_clutch_mass_kg: float
    rho_E: float
    holding_force_N: float
    holding_limit: str
    objective: float
    violations: tuple[Violation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def sort_key(self) -> tuple:
        g = self.geometry
        return (self.objective, self.log_lambda_F, self.estimated_clutch_mass_kg, g.drum_radius_mm,
                g.pulley_radius_mm, g.drum_length_mm, g.wire_diameter_mm, g.friction_coeff)

    def to_dict(self) -> dict:
        g = self.geometry
        return {
            **{name: getattr(g, name) for name in DIMENSIONS},
            "lambda_F": self.lambda_F,
            "log_lambda_F": self.log_lambda_F,
            "estimated_clutch_mass_kg": self.estimated_clutch_mass_kg,
            "rho_E": self.rho_E,
            "holding_force_N": self.holding_force_N,
            "holding_limit": self.holding_limit,
            "objective": self.objective,
            "feasible": self.feasible,
            "violations": [str(v) for v in self.violations],
        }


def feasible(geometry: CapstanGeometry, constraints: DesignConstraints) -> list[Violation]:
    """Every constraint the geometry breaks; empty when feasible."""
    out: list[Violation] = []
    n = geometry.wrap_count
    d_w, l_d, r_d = geometry.wire_diameter_mm, geometry.drum_length_mm, geometry.drum_radius_mm
    if n < 1 or n * d_w > l_d * (1 + 1e-9):
        out.append(Violation("wraps do not fit", f"{n:.3g} wraps of {d_w:g} mm on a {l_d:g} mm drum"))
    envelope = 2 * r_d + 2 * d_w
    if envelope > constraints.max_envelope_mm:
        out.append(Violation("envelope exceeded", f"{envelope:g} > {constraints.max_envelope_mm:g} mm"))
    hold = max_holding_force(geometry, constraints.solenoid, constraints.cable)
    if hold.force_N < constraints.required_holding_force_N:
        out.append(Violation(
            f"{hold.limit}-limited below requirement",
            f"{hold.force_N:.4g} < {constraints.required_holding_force_N:g} N",
        ))
    for name, b in constraints.bounds().items():
        v = getattr(geometry, name)
        if not b.contains(v):
            out.append(Violation(f"{name} out of bounds", f"{v:g} not in [{b.lo:g}, {b.hi:g}]"))
    return out


def evaluate(
    geometry: CapstanGeometry, constraints: DesignConstraints, objective: ObjectiveSpec | None = None
) -> DesignCandidate:
    objective = objective or ObjectiveSpec()
    lam = locking_force_ratio(geometry)
    log_lam = log_locking_force_ratio(geometry)
    mass = estimate_clutch_mass(geometry, constraints.mass_model)
    m_s = constraints.spring.mass_kg
    rho = m_s / (m_s + mass)
    hold = max_holding_force(geometry, constraints.solenoid, constraints.cable)
    return DesignCandidate(
        geometry=geometry,
        lambda_F=lam,
        log_lambda_F=log_lam,
        estimated_clutch_mass_kg=mass,
        rho_E=rho,
        holding_force_N=hold.force_N,
        holding_limit=hold.limit,
        objective=objective.score(log_lam, rho),
        violations=tuple(feasible(geometry, constraints)),
    )


def grid_axes(constraints: DesignConstraints, budget: int) -> dict[str, np.ndarray]:
    """Evenly spaced axis values; free dimensions share ``budget`` points evenly."""
    if budget < 1:
        raise ValidationError("budget", "must be >= 1")
    bounds = constraints.bounds()
    free = [name for name, b in bounds.items() if not b.fixed]
    per_dim = 1
    if free:
        per_dim = max(2, int(math.floor(budget ** (1.0 / len(free)) + 1e-9)))
    return {
        name: np.array([b.lo]) if b.fixed else np.linspace(b.lo, b.hi, per_dim)
        for name, b in bounds.items()
    }


def grid_geometries(axes: dict[str, np.ndarray]) -> Iterable[CapstanGeometry]:
    for values in itertools.product(*(axes[name] for name in DIMENSIONS)):
        yield CapstanGeometry(**{name: float(v) for name, v in zip(DIMENSIONS, values)})


def pareto_front(candidates: Iterable[DesignCandidate]) -> list[DesignCandidate]:
    """Candidates not dominated in (clutch mass, lambda_F), sorted by mass."""
    ordered = sorted(candidates, key=lambda c: (c.estimated_clutch_mass_kg, c.log_lambda_F, c.sort_key()))
    front: list[DesignCandidate] = []
    best = math.inf
    for c in ordered:
        if c.log_lambda_F < best:
            front.append(c)
            best = c.log_lambda_F
    return front


def refine(
    seed: DesignCandidate,
    constraints: DesignConstraints,
    objective: ObjectiveSpec,
    initial_steps: dict[str, float],
    min_step_fraction: float = 1e-3,
    max_sweeps: int = 200,
) -> tuple[DesignCandidate, list[DesignCandidate]]:
    """Coordinate descent from ``seed``; returns the best point and every feasible point visited.

    Moves are accepted only if feasible and strictly better in sort order, so
    the result is never worse than the seed.
    """
    bounds = constraints.bounds()
    steps = {k: v for k, v in initial_steps.items() if v > 0}
    floor = {k: min_step_fraction * (bounds[k].hi - bounds[k].lo) for k in steps}
    best = seed
    visited: list[DesignCandidate] = []
    for _ in range(max_sweeps):
        if not steps:
            break
        improved = False
        for name in DIMENSIONS:
            if name not in steps:
                continue
            for sign in (1.0, -1.0):
                current = getattr(best.geometry, name)
                value = bounds[name].clamp(current + sign * steps[name])
                if value == current:
                    continue
                trial = evaluate(replace(best.geometry, **{name: value}), constraints, objective)
                if not trial.feasible:
                    continue
                visited.append(trial)
                if trial.sort_key() < best.sort_key():
                    best = trial
                    improved = True
                    break
        if not improved:
            steps = {k: v / 2 for k, v in steps.items() if v / 2 >= floor[k]}
    return best, visited


@dataclass
class OptimizationResult:
    ranked: list[DesignCandidate]
    pareto: list[DesignCandidate]
    grid_best: DesignCandidate
    grid_points: int
    evaluations: int
    feasible_grid_points: int
    refined: bool

    @property
    def best(self) -> DesignCandidate:
        return self.ranked[0]


def optimize(
    constraints: DesignConstraints,
    objective: ObjectiveSpec | None = None,
    budget: int = 4096,
    refine_top_k: int = 5,
    refinement: bool = True,
) -> OptimizationResult:
    """Grid search over the constraint bounds, then coordinate-descent polish.

    ``budget`` caps the grid size.  Raises :class:`InfeasibleDesignError` with
    violation counts when no grid point is feasible.
    """
    objective = objective or ObjectiveSpec()
    axes = grid_axes(constraints, budget)
    grid = [evaluate(g, constraints, objective) for g in grid_geometries(axes)]
    good = sorted((c for c in grid if c.feasible), key=DesignCandidate.sort_key)
    if not good:
        counts = Counter(v.code for c in grid for v in c.violations)
        binding = ", ".join(f"{code} x{n}" for code, n in counts.most_common())
        raise InfeasibleDesignError(f"no feasible design on a {len(grid)}-point grid: {binding}", counts)

    pool = list(good)
    evaluations = len(grid)
    if refinement and refine_top_k > 0:
        steps = {
            name: (float(ax[1] - ax[0]) if ax.size > 1 else 0.0) for name, ax in axes.items()
        }
        for seed in good[:refine_top_k]:
            best, visited = refine(seed, constraints, objective, steps)
            evaluations += len(visited)
            pool.extend(visited)
            pool.append(best)

    unique: dict[tuple, DesignCandidate] = {}
    for c in pool:
        unique.setdefault(c.sort_key(), c)
    ranked = sorted(unique.values(), key=DesignCandidate.sort_key)
    return OptimizationResult(
        ranked=ranked,
        pareto=pareto_front(ranked),
        grid_best=good[0],
        grid_points=len(grid),
        evaluations=evaluations,
        feasible_grid_points=len(good),
        refined=refinement and refine_top_k > 0,
    )
