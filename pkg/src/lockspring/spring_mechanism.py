"""Energy-storage path: die spring, cable, pulley kinematics and tensioner.

The spring is linear; the cable is linear-elastic up to break, anchored on the
published elongation at the breaking load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from lockspring.clutch_model import CapstanGeometry, _require_positive
from lockspring.errors import CableFailureError, RangeError, ValidationError

NMM_PER_J = 1000.0


@dataclass(frozen=True)
class SpringSpec:
    """Linear compression spring; ``mass_kg`` includes the non-clutch support structure."""

    stiffness_N_per_mm: float = 14.8
    free_length_mm: float = 305.0
    max_deflection_mm: float = 90.0
    mass_kg: float = 1.32

    def __post_init__(self) -> None:
        _require_positive("stiffness_N_per_mm", self.stiffness_N_per_mm)
        _require_positive("free_length_mm", self.free_length_mm)
        _require_positive("max_deflection_mm", self.max_deflection_mm)
        _require_positive("mass_kg", self.mass_kg)
        if self.max_deflection_mm >= self.free_length_mm:
            raise ValidationError("max_deflection_mm", "must be smaller than free_length_mm")


@dataclass(frozen=True)
class CableSpec:
    breaking_strength_N: float = 2700.0
    elongation_fraction_at_break: float = 0.04
    routed_length_mm: float = 400.0
    safety_factor: float = 1.0

    def __post_init__(self) -> None:
        _require_positive("breaking_strength_N", self.breaking_strength_N)
        _require_positive("routed_length_mm", self.routed_length_mm)
        e = self.elongation_fraction_at_break
        if not (isinstance(e, (int, float)) and 0 < e <= 0.1):
            raise ValidationError("elongation_fraction_at_break", f"must lie in (0, 0.1], got {e!r}")
        s = self.safety_factor
        if not (isinstance(s, (int, float)) and math.isfinite(s) and s >= 1):
            raise ValidationError("safety_factor", f"must be >= 1, got {s!r}")

    @property
    def compliance_mm_per_N(self) -> float:
        return self.routed_length_mm * self.elongation_fraction_at_break / self.breaking_strength_N


@dataclass(frozen=True)
class TensionerSpec:
    """Constant-force torsional spring keeping the cable taut on the pulley."""

    torque_mNm: float = 145.0

    def __post_init__(self) -> None:
        _require_positive("torque_mNm", self.torque_mNm)


@dataclass(frozen=True)
class MassBudget:
    spring_side_mass_kg: float = 1.32
    clutch_mass_kg: float = 0.62

    def __post_init__(self) -> None:
        _require_positive("spring_side_mass_kg", self.spring_side_mass_kg)
        _require_positive("clutch_mass_kg", self.clutch_mass_kg)


def _check_deflection(spec: SpringSpec, deflection_mm: float) -> None:
    if not (0.0 <= deflection_mm <= spec.max_deflection_mm):
        raise RangeError(
            f"deflection {deflection_mm!r} mm outside [0, {spec.max_deflection_mm}] mm"
        )


def spring_force(spec: SpringSpec, deflection_mm: float) -> float:
    """Spring force in N at ``deflection_mm``; the range ends model hard stops."""
    _check_deflection(spec, deflection_mm)
    return spec.stiffness_N_per_mm * deflection_mm


def stored_energy(spec: SpringSpec, deflection_mm: float) -> float:
    """Elastic energy in J at ``deflection_mm``."""
    _check_deflection(spec, deflection_mm)
    return 0.5 * spec.stiffness_N_per_mm * deflection_mm**2 / NMM_PER_J


def baseline_cable_tension(tensioner: TensionerSpec, geometry: CapstanGeometry) -> float:
    """Cable tension (N) produced by the tensioner torque acting at the pulley radius."""
    # mN*m / mm == N
    return tensioner.torque_mNm / geometry.pulley_radius_mm


def pulley_angle(deflection_mm: float, geometry: CapstanGeometry) -> float:
    """Pulley rotation (rad) that winds up ``deflection_mm`` of inextensible cable."""
    if deflection_mm < 0:
        raise RangeError(f"deflection must be >= 0, got {deflection_mm!r}")
    return deflection_mm / geometry.pulley_radius_mm


def cable_stretch(cable: CableSpec, tension_N: float) -> float:
    """Elastic elongation (mm) of the routed cable under ``tension_N``."""
    if tension_N < 0:
        raise RangeError(f"tension must be >= 0, got {tension_N!r}")
    if tension_N > cable.breaking_strength_N:
        raise CableFailureError(
            f"tension {tension_N:.1f} N exceeds breaking strength {cable.breaking_strength_N:.1f} N"
        )
    return cable.compliance_mm_per_N * tension_N
