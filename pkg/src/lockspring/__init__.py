"""Modeling, simulation and analysis toolkit for capstan-locked compression springs."""

from lockspring.clutch_model import (
    CapstanGeometry,
    SolenoidSpec,
    locking_force_ratio,
    max_holding_force,
    unlock_energy,
    wrap_angle,
)
from lockspring.spring_mechanism import (
    CableSpec,
    MassBudget,
    SpringSpec,
    TensionerSpec,
    spring_force,
    stored_energy,
)

__version__ = "0.1.0"

__all__ = [
    "CableSpec",
    "CapstanGeometry",
    "MassBudget",
    "SolenoidSpec",
    "SpringSpec",
    "TensionerSpec",
    "locking_force_ratio",
    "max_holding_force",
    "spring_force",
    "stored_energy",
    "unlock_energy",
    "wrap_angle",
]
