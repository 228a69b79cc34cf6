"""Capstan brake physics.

A wire wrapped ``n`` times around a drum multiplies a small anchoring force
by ``exp(2*pi*mu*n)``.  The cable pulley of radius ``r_p`` shares a shaft with
the drum of radius ``r_d``, so the ratio between the solenoid-side holding
force and the spring force it restrains is::

    lambda_F = (r_p / r_d) * exp(-mu * theta),   theta = 2*pi*n

with ``n = l_d / d_w`` unless an explicit wrap count is given.

Units: millimeters, newtons, seconds, joules.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple, Optional

from lockspring.errors import ValidationError

if TYPE_CHECKING:
    from lockspring.spring_mechanism import CableSpec

MU_MAX = 2.0


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValidationError(name, f"must be a finite number > 0, got {value!r}")


@dataclass(frozen=True)
class CapstanGeometry:
    """Pulley, drum and wire dimensions plus wire/drum friction."""

    pulley_radius_mm: float = 12.0
    drum_radius_mm: float = 19.0
    drum_length_mm: float = 20.0
    wire_diameter_mm: float = 2.4
    friction_coeff: float = 0.4
    wrap_count_override: Optional[float] = None

    def __post_init__(self) -> None:
        _require_positive("pulley_radius_mm", self.pulley_radius_mm)
        _require_positive("drum_radius_mm", self.drum_radius_mm)
        _require_positive("drum_length_mm", self.drum_length_mm)
        _require_positive("wire_diameter_mm", self.wire_diameter_mm)
        mu = self.friction_coeff
        if not (isinstance(mu, (int, float)) and math.isfinite(mu) and 0 < mu <= MU_MAX):
            raise ValidationError("friction_coeff", f"must lie in (0, {MU_MAX}], got {mu!r}")
        if self.wrap_count_override is not None:
            _require_positive("wrap_count_override", self.wrap_count_override)
            if self.wrap_count_override * self.wire_diameter_mm > self.drum_length_mm:
                warnings.warn(
                    f"{self.wrap_count_override} wraps of a {self.wire_diameter_mm} mm wire "
                    f"exceed the {self.drum_length_mm} mm drum length",
                    stacklevel=3,
                )

    @property
    def wrap_count(self) -> float:
        if self.wrap_count_override is not None:
            return float(self.wrap_count_override)
        return self.drum_length_mm / self.wire_diameter_mm

    @property
    def radius_ratio(self) -> float:
        return self.pulley_radius_mm / self.drum_radius_mm


@dataclass(frozen=True)
class SolenoidSpec:
    """Release actuator: pretension spring on the armature and its drive."""

    pretension_force_N: float = 0.65
    drive_voltage_V: float = 15.0
    drive_current_A: float = 0.6
    actuation_time_s: float = 0.010

    def __post_init__(self) -> None:
        _require_positive("pretension_force_N", self.pretension_force_N)
        _require_positive("drive_voltage_V", self.drive_voltage_V)
        _require_positive("drive_current_A", self.drive_current_A)
        # zero actuation time is a meaningful limit for energy accounting
        t = self.actuation_time_s
        if not (isinstance(t, (int, float)) and math.isfinite(t) and t >= 0):
            raise ValidationError("actuation_time_s", f"must be a finite number >= 0, got {t!r}")

    @property
    def peak_power_W(self) -> float:
        return self.drive_voltage_V * self.drive_current_A


class HoldingForce(NamedTuple):
    force_N: float
    limit: str  # "capstan" or "cable"
    capstan_limit_N: float
    cable_limit_N: float


def wrap_angle(geometry: CapstanGeometry) -> float:
    """Total wrap angle of the wire on the drum, in radians."""
    return 2.0 * math.pi * geometry.wrap_count


def log_locking_force_ratio(geometry: CapstanGeometry) -> float:
    """Natural log of :func:`locking_force_ratio`; finite even when the ratio underflows."""
    return math.log(geometry.radius_ratio) - geometry.friction_coeff * wrap_angle(geometry)


def locking_force_ratio(geometry: CapstanGeometry, friction_coeff: Optional[float] = None) -> float:
    """Holding force needed per newton of spring force.

    ``friction_coeff`` overrides the geometry's coefficient; passing ``0``
    gives the frictionless limit ``r_p / r_d``.
    """
    mu = geometry.friction_coeff if friction_coeff is None else friction_coeff
    if mu < 0:
        raise ValidationError("friction_coeff", f"must be >= 0, got {mu!r}")
    return geometry.radius_ratio * math.exp(-mu * wrap_angle(geometry))


def max_holding_force(
    geometry: CapstanGeometry,
    solenoid: SolenoidSpec,
    cable: "CableSpec",
    lambda_F: Optional[float] = None,
) -> HoldingForce:
    """Largest spring force the locked clutch can restrain.

    The capstan can hold ``pretension / lambda_F``; the cable can carry its
    breaking strength divided by the safety factor.  The smaller one binds.
    ``lambda_F`` may be forced for what-if studies.
    """
    if solenoid.pretension_force_N <= 0:
        raise ValidationError("pretension_force_N", "clutch cannot self-engage")
    ratio = locking_force_ratio(geometry) if lambda_F is None else lambda_F
    capstan = math.inf if ratio == 0 else solenoid.pretension_force_N / ratio
    cable_limit = cable.breaking_strength_N / cable.safety_factor
    if capstan < cable_limit:
        return HoldingForce(capstan, "capstan", capstan, cable_limit)
    return HoldingForce(cable_limit, "cable", capstan, cable_limit)


def unlock_energy(solenoid: SolenoidSpec) -> float:
    """Electrical energy (J) spent to pull the armature: peak power times actuation time."""
    return solenoid.drive_voltage_V * solenoid.drive_current_A * solenoid.actuation_time_s
