"""Quasi-static work-loop simulator.

The load head (crosshead) and the top of the spring move together while they
are in contact, so the trace deflection is the spring deflection.  The clutch
is free in compression: on loading the engagement point simply follows the
spring.  On unloading with the clutch armed the spring extends by a
back-travel ``b = slip + cable_stretch(k * L)`` before the capstan holds it,
and the measured force falls linearly from ``k * L`` to zero across that
travel.  Releasing the clutch lets the spring return along its own line.

Energy bookkeeping per step::

    work_in    crosshead work on compression (trapezoid of emitted samples)
    drop_work  crosshead work during lock back-travel (area under the drop)
    absorbed   spring energy lost during back-travel but not seen by the load
               cell (clutch slip and cable strain)
    returned   crosshead work during free extension after release

so that ``work_in == retained + drop_work + absorbed + returned``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from lockspring.clutch_model import CapstanGeometry
from lockspring.errors import RangeError, ValidationError
from lockspring.spring_mechanism import NMM_PER_J, CableSpec, SpringSpec, cable_stretch

# Calibrated once so the default protocol analyses to eta = 0.80 (see
# lockspring.calibration.calibrate_engagement_slip).  Calibrated, not measured.
DEFAULT_ENGAGEMENT_SLIP_MM = 2.35

DEFAULT_SAMPLE_RATE_HZ = 100.0
DEFAULT_CONTACT_THRESHOLD_N = 0.5
DEFAULT_LOCK_DEFLECTIONS_MM = (10.0, 30.0, 50.0, 70.0, 90.0)

_EPS_MM = 1e-12


class PhaseKind(str, Enum):
    COMPRESS_TO = "compress_to"
    UNLOAD = "unload_until_contact_lost"
    RELEASE = "release_clutch"
    HOLD = "hold"


_PHASE_ALIASES = {
    "compress_to": PhaseKind.COMPRESS_TO,
    "compress": PhaseKind.COMPRESS_TO,
    "unload_until_contact_lost": PhaseKind.UNLOAD,
    "unload": PhaseKind.UNLOAD,
    "release_clutch": PhaseKind.RELEASE,
    "release": PhaseKind.RELEASE,
    "hold": PhaseKind.HOLD,
}


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    value: Optional[float] = None  # target deflection (mm) or hold duration (s)

    def __post_init__(self) -> None:
        needs_value = self.kind in (PhaseKind.COMPRESS_TO, PhaseKind.HOLD)
        if needs_value:
            if self.value is None or not math.isfinite(self.value) or self.value < 0:
                raise ValidationError("phases", f"{self.kind.value} needs a value >= 0")
        elif self.value is not None:
            raise ValidationError("phases", f"{self.kind.value} takes no value")

    @classmethod
    def parse(cls, text: str) -> "Phase":
        """Parse ``compress_to:10``, ``unload``, ``release`` or ``hold:2.5``."""
        name, _, arg = text.strip().partition(":")
        kind = _PHASE_ALIASES.get(name.strip())
        if kind is None:
            raise ValidationError("phases", f"unknown phase {name.strip()!r}")
        value = None
        if arg.strip():
            try:
                value = float(arg)
            except ValueError:
                raise ValidationError("phases", f"bad phase value {arg.strip()!r}") from None
        return cls(kind, value)

    def __str__(self) -> str:
        if self.value is None:
            return self.kind.value
        short = f"{self.value:g}"
        return f"{self.kind.value}:{short if float(short) == self.value else repr(self.value)}"


@dataclass(frozen=True)
class Protocol:
    phases: tuple[Phase, ...]
    crosshead_speed_mm_per_s: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", tuple(self.phases))
        v = self.crosshead_speed_mm_per_s
        if not (math.isfinite(v) and v > 0):
            raise ValidationError("crosshead_speed_mm_per_s", f"must be > 0, got {v!r}")
        last = -math.inf
        for ph in self.phases:
            if ph.kind is PhaseKind.COMPRESS_TO:
                if ph.value < last:
                    raise ValidationError(
                        "phases",
                        f"compress targets must be nondecreasing within a run "
                        f"({ph.value:g} after {last:g})",
                    )
                last = ph.value
            elif ph.kind is PhaseKind.RELEASE:
                last = -math.inf

    @classmethod
    def accumulation(
        cls,
        lock_deflections_mm: Iterable[float] = DEFAULT_LOCK_DEFLECTIONS_MM,
        release: bool = True,
        crosshead_speed_mm_per_s: float = 0.5,
    ) -> "Protocol":
        """Compress-and-lock at each deflection in turn, optionally releasing at the end."""
        phases: list[Phase] = []
        for target in lock_deflections_mm:
            phases.append(Phase(PhaseKind.COMPRESS_TO, float(target)))
            phases.append(Phase(PhaseKind.UNLOAD))
        if release:
            phases.append(Phase(PhaseKind.RELEASE))
        return cls(tuple(phases), crosshead_speed_mm_per_s)

    def to_text(self) -> str:
        return ", ".join(str(ph) for ph in self.phases)

    @classmethod
    def from_text(cls, text: str, crosshead_speed_mm_per_s: float = 0.5) -> "Protocol":
        items = [p for p in text.replace(";", ",").split(",") if p.strip()]
        return cls(tuple(Phase.parse(p) for p in items), crosshead_speed_mm_per_s)


@dataclass(frozen=True)
class LockLossModel:
    engagement_slip_mm: float = DEFAULT_ENGAGEMENT_SLIP_MM
    include_cable_compliance: bool = True

    def __post_init__(self) -> None:
        d = self.engagement_slip_mm
        if not (math.isfinite(d) and d >= 0):
            raise ValidationError("engagement_slip_mm", f"must be >= 0, got {d!r}")

    def back_travel(self, lock_force_N: float, cable: CableSpec) -> float:
        """Spring extension (mm) between unloading onset and full engagement."""
        b = self.engagement_slip_mm
        if self.include_cable_compliance:
            b += cable_stretch(cable, lock_force_N)
        return b


@dataclass(frozen=True)
class Assembly:
    """The parts of the mechanism the work-loop depends on."""

    spring: SpringSpec = field(default_factory=SpringSpec)
    cable: CableSpec = field(default_factory=CableSpec)
    geometry: CapstanGeometry = field(default_factory=CapstanGeometry)


@dataclass(frozen=True)
class MechanismState:
    deflection_mm: float = 0.0
    locked_deflection_mm: Optional[float] = 0.0
    clutch_engaged: bool = True
    external_contact: bool = True
    time_s: float = 0.0

    def __post_init__(self) -> None:
        if self.clutch_engaged != (self.locked_deflection_mm is not None):
            raise ValidationError(
                "locked_deflection_mm", "must be present exactly when the clutch is engaged"
            )
        if self.clutch_engaged and self.deflection_mm > self.locked_deflection_mm + _EPS_MM:
            raise ValidationError(
                "deflection_mm", "cannot exceed the locked deflection while engaged"
            )


class Command(str, Enum):
    COMPRESS = "compress"
    UNLOAD = "unload"
    RELEASE = "release"
    HOLD = "hold"


class Sample(NamedTuple):
    time_s: float
    deflection_mm: float
    force_N: float
    clutch_engaged: bool


@dataclass
class StepEnergy:
    """Energy increments of one step, in N*mm."""

    work_in: float = 0.0
    drop_work: float = 0.0
    absorbed: float = 0.0
    returned: float = 0.0


class StepResult(NamedTuple):
    state: MechanismState
    sample: Sample
    energy: StepEnergy


@dataclass(frozen=True)
class LockEvent:
    locked_deflection_mm: float
    back_travel_mm: float
    retained_deflection_mm: float
    retained_force_N: float
    retained_energy_J: float
    drop_work_J: float
    absorbed_J: float


@dataclass
class EnergyLedger:
    """Running energy totals, all in J."""

    work_in_J: float = 0.0
    drop_work_J: float = 0.0
    absorbed_J: float = 0.0
    returned_J: float = 0.0
    retained_J: float = 0.0
    events: list[LockEvent] = field(default_factory=list)

    @property
    def lock_loss_J(self) -> float:
        return self.drop_work_J + self.absorbed_J

    @property
    def closure_error_J(self) -> float:
        return self.work_in_J - (self.retained_J + self.lock_loss_J + self.returned_J)

    def add(self, e: StepEnergy) -> None:
        self.work_in_J += e.work_in / NMM_PER_J
        self.drop_work_J += e.drop_work / NMM_PER_J
        self.absorbed_J += e.absorbed / NMM_PER_J
        self.returned_J += e.returned / NMM_PER_J

    def to_dict(self) -> dict[str, Any]:
        return {
            "work_in_J": self.work_in_J,
            "drop_work_J": self.drop_work_J,
            "absorbed_J": self.absorbed_J,
            "lock_loss_J": self.lock_loss_J,
            "returned_J": self.returned_J,
            "retained_J": self.retained_J,
            "closure_error_J": self.closure_error_J,
            "events": [e.__dict__.copy() for e in self.events],
        }


@dataclass
class WorkLoopTrace:
    """Sampled time/deflection/force/clutch-state series plus metadata.

    ``ledger`` is only present on simulated traces.
    """

    time_s: np.ndarray
    deflection_mm: np.ndarray
    force_N: np.ndarray
    clutch_engaged: np.ndarray
    metadata: dict[str, str] = field(default_factory=dict)
    ledger: Optional[EnergyLedger] = None

    def __post_init__(self) -> None:
        self.time_s = np.asarray(self.time_s, dtype=float)
        self.deflection_mm = np.asarray(self.deflection_mm, dtype=float)
        self.force_N = np.asarray(self.force_N, dtype=float)
        self.clutch_engaged = np.asarray(self.clutch_engaged, dtype=bool)
        n = self.time_s.size
        for name in ("deflection_mm", "force_N", "clutch_engaged"):
            if getattr(self, name).shape != (n,):
                raise ValidationError(name, f"expected {n} samples")
        for name in ("time_s", "deflection_mm", "force_N"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(name, "contains non-finite values")
        bad = np.flatnonzero(np.diff(self.time_s) <= 0)
        if bad.size:
            raise ValidationError("time_s", f"time not increasing at sample {bad[0] + 1}")
        if np.any(self.force_N < 0):
            raise ValidationError("force_N", f"negative force at sample {int(np.argmax(self.force_N < 0))}")
        if np.any(self.deflection_mm < 0):
            raise ValidationError(
                "deflection_mm", f"negative deflection at sample {int(np.argmax(self.deflection_mm < 0))}"
            )

    def __len__(self) -> int:
        return int(self.time_s.size)

    def subsample(self, step: int) -> "WorkLoopTrace":
        """Every ``step``-th sample, always keeping the last one."""
        idx = np.arange(0, len(self), step)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        return WorkLoopTrace(
            self.time_s[idx], self.deflection_mm[idx], self.force_N[idx],
            self.clutch_engaged[idx], dict(self.metadata),
        )

    def with_time_scaled(self, factor: float) -> "WorkLoopTrace":
        return replace(self, time_s=self.time_s * factor, metadata=dict(self.metadata), ledger=None)


def measured_force(state: MechanismState, assembly: Assembly, loss: LockLossModel) -> float:
    """Force seen by the load cell in ``state``."""
    if not state.external_contact:
        return 0.0
    k = assembly.spring.stiffness_N_per_mm
    x = state.deflection_mm
    if state.clutch_engaged and x < state.locked_deflection_mm:
        # mid back-travel: linear decay from k*L to zero
        L = state.locked_deflection_mm
        b = _effective_back_travel(L, assembly, loss)
        return max(k * L * (1.0 - (L - x) / b), 0.0)
    return k * x


def _effective_back_travel(locked_mm: float, assembly: Assembly, loss: LockLossModel) -> float:
    b = loss.back_travel(assembly.spring.stiffness_N_per_mm * locked_mm, assembly.cable)
    return min(b, locked_mm)


def retained_force_after_lock(
    state: MechanismState, assembly: Assembly, loss: LockLossModel
) -> float:
    """Spring force held by the clutch once the load head has lost contact."""
    if not state.clutch_engaged:
        raise ValidationError("clutch_engaged", "clutch must be engaged")
    L = state.locked_deflection_mm
    b = loss.back_travel(assembly.spring.stiffness_N_per_mm * L, assembly.cable)
    if b >= L:
        warnings.warn(
            f"back-travel {b:.3g} mm consumes the whole {L:.3g} mm lock: full loss",
            stacklevel=2,
        )
        return 0.0
    return assembly.spring.stiffness_N_per_mm * (L - b)


def step(
    state: MechanismState,
    command: Command,
    dt_s: float,
    assembly: Assembly,
    loss: LockLossModel,
    speed_mm_per_s: float = 0.5,
    contact_threshold_N: float = DEFAULT_CONTACT_THRESHOLD_N,
) -> StepResult:
    """Advance the mechanism by one time step under ``command``."""
    if not dt_s > 0:
        raise ValidationError("dt_s", f"must be > 0, got {dt_s!r}")
    spring = assembly.spring
    k = spring.stiffness_N_per_mm
    x0 = state.deflection_mm
    f0 = measured_force(state, assembly, loss)
    energy = StepEnergy()
    t1 = state.time_s + dt_s

    if command is Command.COMPRESS:
        if not state.external_contact:
            # load head comes back onto the spring; no travel, and the
            # clutch re-arms at the retained deflection
            locked = x0 if state.clutch_engaged else None
            new = replace(state, locked_deflection_mm=locked, external_contact=True, time_s=t1)
        else:
            x1 = x0 + speed_mm_per_s * dt_s
            if x1 > spring.max_deflection_mm * (1 + 1e-12):
                raise RangeError(
                    f"compression to {x1:.6g} mm exceeds {spring.max_deflection_mm} mm"
                )
            x1 = min(x1, spring.max_deflection_mm)
            locked = x1 if state.clutch_engaged else None
            new = replace(state, deflection_mm=x1, locked_deflection_mm=locked, time_s=t1)
            energy.work_in = 0.5 * (f0 + k * x1) * (x1 - x0)

    elif command is Command.UNLOAD:
        if not state.external_contact:
            new = replace(state, time_s=t1)
        elif state.clutch_engaged:
            L = state.locked_deflection_mm
            end = L - _effective_back_travel(L, assembly, loss)
            x1 = max(x0 - speed_mm_per_s * dt_s, end)
            probe = replace(state, deflection_mm=x1)
            if x1 - end <= _EPS_MM or measured_force(probe, assembly, loss) <= contact_threshold_N:
                x1 = end
            lost = x1 == end
            new = replace(state, deflection_mm=x1, external_contact=not lost, time_s=t1)
            f1 = 0.0 if lost else measured_force(new, assembly, loss)
            energy.drop_work = 0.5 * (f0 + f1) * (x0 - x1)
            energy.absorbed = 0.5 * k * (x0 * x0 - x1 * x1) - energy.drop_work
        else:
            x1 = max(x0 - speed_mm_per_s * dt_s, 0.0)
            if k * x1 <= contact_threshold_N:
                x1 = 0.0
            new = replace(state, deflection_mm=x1, external_contact=x1 > 0.0, time_s=t1)
            energy.returned = 0.5 * (f0 + k * x1) * (x0 - x1)

    elif command is Command.RELEASE:
        new = replace(
            state, clutch_engaged=False, locked_deflection_mm=None, external_contact=True, time_s=t1
        )
    elif command is Command.HOLD:
        new = replace(state, time_s=t1)
    else:  # pragma: no cover
        raise ValidationError("command", f"unknown command {command!r}")

    f1 = measured_force(new, assembly, loss)
    return StepResult(new, Sample(t1, new.deflection_mm, f1, new.clutch_engaged), energy)


def _n_steps(distance: float, speed: float, rate: float) -> int:
    return max(1, math.ceil(distance * rate / speed - 1e-9))


def run_protocol(
    protocol: Protocol,
    assembly: Assembly | None = None,
    loss: LockLossModel | None = None,
    sample_rate_Hz: float = DEFAULT_SAMPLE_RATE_HZ,
    contact_threshold_N: float = DEFAULT_CONTACT_THRESHOLD_N,
    metadata: dict[str, str] | None = None,
) -> WorkLoopTrace:
    """Simulate ``protocol`` from the unloaded, clutch-armed state.

    Each travel phase is split into equal steps no longer than one sample
    period so phase end points land exactly on samples.
    """
    assembly = assembly or Assembly()
    loss = loss or LockLossModel()
    if not (math.isfinite(sample_rate_Hz) and sample_rate_Hz > 0):
        raise ValidationError("sample_rate_Hz", f"must be > 0, got {sample_rate_Hz!r}")
    v = protocol.crosshead_speed_mm_per_s
    dt_nom = 1.0 / sample_rate_Hz
    k = assembly.spring.stiffness_N_per_mm

    state = MechanismState()
    ledger = EnergyLedger()
    samples: list[Sample] = [Sample(0.0, 0.0, 0.0, True)]

    def advance(cmd: Command, dt: float) -> None:
        nonlocal state
        res = step(state, cmd, dt, assembly, loss, v, contact_threshold_N)
        state = res.state
        ledger.add(res.energy)
        samples.append(res.sample)

    def travel(cmd: Command, distance: float) -> None:
        n = _n_steps(distance, v, sample_rate_Hz)
        dt = distance / (v * n) if distance > 0 else dt_nom
        for _ in range(n):
            advance(cmd, dt)
            if cmd is Command.UNLOAD and not state.external_contact:
                break

    def unload_to_contact_loss() -> None:
        if not state.external_contact:
            return
        if state.clutch_engaged:
            L = state.locked_deflection_mm
            before = ledger.drop_work_J, ledger.absorbed_J
            b = _effective_back_travel(L, assembly, loss)
            travel(Command.UNLOAD, state.deflection_mm - (L - b))
            while state.external_contact:  # float slack on the last step
                advance(Command.UNLOAD, dt_nom)
            xr = state.deflection_mm
            ledger.events.append(
                LockEvent(
                    locked_deflection_mm=L,
                    back_travel_mm=L - xr,
                    retained_deflection_mm=xr,
                    retained_force_N=k * xr,
                    retained_energy_J=0.5 * k * xr * xr / NMM_PER_J,
                    drop_work_J=ledger.drop_work_J - before[0],
                    absorbed_J=ledger.absorbed_J - before[1],
                )
            )
        else:
            travel(Command.UNLOAD, state.deflection_mm)
            while state.external_contact:
                advance(Command.UNLOAD, dt_nom)

    for phase in protocol.phases:
        if phase.kind is PhaseKind.COMPRESS_TO:
            target = phase.value
            if target < state.deflection_mm - 1e-9:
                raise RangeError(
                    f"compress_to {target:g} mm is below the current {state.deflection_mm:.6g} mm"
                )
            if target > assembly.spring.max_deflection_mm:
                raise RangeError(
                    f"compress_to {target:g} mm exceeds {assembly.spring.max_deflection_mm} mm"
                )
            if not state.external_contact:
                advance(Command.COMPRESS, dt_nom)
            dist = target - state.deflection_mm
            if dist > _EPS_MM:
                travel(Command.COMPRESS, dist)
        elif phase.kind is PhaseKind.UNLOAD:
            unload_to_contact_loss()
        elif phase.kind is PhaseKind.RELEASE:
            if state.clutch_engaged or not state.external_contact:
                advance(Command.RELEASE, dt_nom)
            unload_to_contact_loss()
        elif phase.kind is PhaseKind.HOLD:
            n = max(1, math.ceil(phase.value * sample_rate_Hz - 1e-9))
            for _ in range(n):
                advance(Command.HOLD, phase.value / n if phase.value > 0 else dt_nom)

    ledger.retained_J = 0.5 * k * state.deflection_mm**2 / NMM_PER_J
    arr = np.array(samples, dtype=float)
    meta = {
        "source": "simulation",
        "protocol": protocol.to_text(),
        "crosshead_speed_mm_per_s": f"{v:g}",
        "sample_rate_Hz": f"{sample_rate_Hz:g}",
        "stiffness_N_per_mm": f"{k:g}",
        "max_deflection_mm": f"{assembly.spring.max_deflection_mm:g}",
        "engagement_slip_mm": f"{loss.engagement_slip_mm:g}",
        "include_cable_compliance": str(int(loss.include_cable_compliance)),
    }
    meta.update(metadata or {})
    return WorkLoopTrace(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(bool), meta, ledger)


def retained_energies(trace: WorkLoopTrace) -> Sequence[float]:
    """Retained spring energy (J) after each lock event of a simulated trace."""
    if trace.ledger is None:
        raise ValidationError("ledger", "trace carries no simulation ledger")
    return [e.retained_energy_J for e in trace.ledger.events]
