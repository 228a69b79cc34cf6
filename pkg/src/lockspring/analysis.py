"""Trace analysis: work integrals, curve segmentation and the three design metrics.

Segmentation labels every sample interval of a force-deflection trace:

* ``loading``          deflection increasing
* ``idle``             deflection constant (within tolerance)
* ``lock-drop``        deflection decreasing with ``|dF/dx|`` above
                       ``slope_threshold_multiple * k`` (force per mm)
* ``released-return``  any other decreasing-deflection interval

Slopes are estimated over a centered stencil of ``slope_window_samples``
intervals, clipped so that it never crosses into a neighbouring run of a
different direction.  Consecutive intervals of equal kind form a segment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from lockspring.errors import UndefinedEfficiencyError, ValidationError
from lockspring.spring_mechanism import NMM_PER_J, MassBudget, SpringSpec
from lockspring.workloop import WorkLoopTrace
from lockspring.clutch_model import CapstanGeometry, SolenoidSpec, locking_force_ratio

LOADING = "loading"
IDLE = "idle"
LOCK_DROP = "lock-drop"
RELEASED_RETURN = "released-return"
SEGMENT_KINDS = (LOADING, LOCK_DROP, RELEASED_RETURN, IDLE)

LAMBDA_F_TARGET = 0.01
RHO_E_TARGET = 0.5


@dataclass(frozen=True)
class AnalysisConfig:
    slope_threshold_multiple: float = 3.0
    slope_window_samples: int = 5
    nominal_stiffness_N_per_mm: Optional[float] = None
    deflection_tolerance_mm: float = 1e-9

    def __post_init__(self) -> None:
        if not self.slope_threshold_multiple > 0:
            raise ValidationError("slope_threshold_multiple", "must be > 0")
        if not (isinstance(self.slope_window_samples, int) and self.slope_window_samples >= 1):
            raise ValidationError("slope_window_samples", "must be an integer >= 1")
        k = self.nominal_stiffness_N_per_mm
        if k is not None and not (math.isfinite(k) and k > 0):
            raise ValidationError("nominal_stiffness_N_per_mm", "must be > 0")
        if not self.deflection_tolerance_mm >= 0:
            raise ValidationError("deflection_tolerance_mm", "must be >= 0")


@dataclass(frozen=True)
class TraceSegment:
    kind: str
    start: int  # first sample index
    stop: int  # last sample index, inclusive
    work_J: float

    @property
    def n_intervals(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class LockEventReport:
    index: int
    peak_deflection_mm: float
    end_deflection_mm: float
    peak_force_N: float
    retained_force_N: float  # nominal k times the deflection where the drop ends
    loading_work_J: float
    loss_J: float
    event_eta: Optional[float]
    cumulative_stored_J: float
    cumulative_eta: float


@dataclass
class EfficiencyReport:
    e_spring_J: float
    e_loss_J: float
    eta: float
    returned_J: float
    net_work_J: float
    nominal_stiffness_N_per_mm: float
    events: list[LockEventReport] = field(default_factory=list)
    segment_counts: dict[str, int] = field(default_factory=dict)

    @property
    def cumulative_stored_J(self) -> list[float]:
        return [e.cumulative_stored_J for e in self.events]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["cumulative_stored_J"] = self.cumulative_stored_J
        return d


def integrate_work(deflection_mm: Sequence[float], force_N: Sequence[float]) -> float:
    """Signed trapezoid integral of force over deflection, in J."""
    x = np.asarray(deflection_mm, dtype=float)
    f = np.asarray(force_N, dtype=float)
    if x.shape != f.shape or x.ndim != 1:
        raise ValidationError("samples", "deflection and force must be equal-length 1-D series")
    if x.size < 2:
        raise ValidationError("samples", "at least 2 samples are needed")
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(x))) / NMM_PER_J


def estimate_stiffness(trace: WorkLoopTrace, tol_mm: float = 1e-9) -> float:
    """Median loading slope (N/mm) of a trace."""
    dx = np.diff(trace.deflection_mm)
    df = np.diff(trace.force_N)
    up = dx > tol_mm
    if not np.any(up):
        raise ValidationError("trace", "no loading samples to estimate stiffness from")
    return float(np.median(df[up] / dx[up]))


def _nominal_stiffness(trace: WorkLoopTrace, config: AnalysisConfig) -> float:
    if config.nominal_stiffness_N_per_mm is not None:
        return config.nominal_stiffness_N_per_mm
    meta = trace.metadata.get("stiffness_N_per_mm")
    if meta is not None:
        try:
            k = float(meta)
        except ValueError:
            raise ValidationError("stiffness_N_per_mm", f"bad metadata value {meta!r}") from None
        if k > 0:
            return k
    return estimate_stiffness(trace, config.deflection_tolerance_mm)


def _runs(direction: np.ndarray) -> list[tuple[int, int, int]]:
    """(direction, first interval, one past last interval) for each run."""
    out = []
    start = 0
    for i in range(1, direction.size + 1):
        if i == direction.size or direction[i] != direction[start]:
            out.append((int(direction[start]), start, i))
            start = i
    return out


def classify_intervals(trace: WorkLoopTrace, config: AnalysisConfig | None = None) -> list[str]:
    """Kind of each of the ``len(trace) - 1`` sample intervals."""
    config = config or AnalysisConfig()
    x = trace.deflection_mm
    f = trace.force_N
    k = _nominal_stiffness(trace, config)
    threshold = config.slope_threshold_multiple * k
    half = (config.slope_window_samples - 1) // 2
    dx = np.diff(x)
    tol = config.deflection_tolerance_mm
    direction = np.where(dx > tol, 1, np.where(dx < -tol, -1, 0))

    kinds = [IDLE] * dx.size
    for d, a, b in _runs(direction):
        if d > 0:
            kinds[a:b] = [LOADING] * (b - a)
        elif d < 0:
            # intervals a..b-1 span samples a..b
            i = np.arange(a, b)
            lo = np.maximum(a, i - half)
            hi = np.minimum(b, i + 1 + half)
            slope = (f[hi] - f[lo]) / (x[hi] - x[lo])
            kinds[a:b] = [LOCK_DROP if abs(s) > threshold else RELEASED_RETURN for s in slope]
    return kinds


def segment_trace(trace: WorkLoopTrace, config: AnalysisConfig | None = None) -> list[TraceSegment]:
    """Partition ``trace`` into segments of uniform kind with their signed work."""
    if len(trace) < 2:
        raise ValidationError("trace", "no samples" if len(trace) == 0 else "trace too short")
    kinds = classify_intervals(trace, config)
    x = trace.deflection_mm
    f = trace.force_N
    interval_work = 0.5 * (f[1:] + f[:-1]) * np.diff(x) / NMM_PER_J
    segments = []
    start = 0
    for i in range(1, len(kinds) + 1):
        if i == len(kinds) or kinds[i] != kinds[start]:
            work = float(np.sum(interval_work[start:i])) if kinds[start] != IDLE else 0.0
            segments.append(TraceSegment(kinds[start], start, i, work))
            start = i
    return segments


def efficiency(trace: WorkLoopTrace, config: AnalysisConfig | None = None) -> EfficiencyReport:
    """Storage-and-return efficiency ``1 - E_loss / E_spring`` of a trace.

    ``E_spring`` is all work put in on loading segments.  ``E_loss`` is the
    area under every lock-drop.  Each lock event also gets the efficiency of
    the compression that preceded it and the running efficiency up to it.
    """
    config = config or AnalysisConfig()
    segments = segment_trace(trace, config)
    k = _nominal_stiffness(trace, config)
    x = trace.deflection_mm
    f = trace.force_N

    e_spring = 0.0
    e_loss = 0.0
    returned = 0.0
    since_last = 0.0
    events: list[LockEventReport] = []
    counts = {kind: 0 for kind in (LOADING, LOCK_DROP, RELEASED_RETURN, IDLE)}
    for seg in segments:
        counts[seg.kind] += 1
        if seg.kind == LOADING:
            e_spring += seg.work_J
            since_last += seg.work_J
        elif seg.kind == RELEASED_RETURN:
            returned += -seg.work_J
        elif seg.kind == LOCK_DROP:
            loss = -seg.work_J
            e_loss += loss
            events.append(
                LockEventReport(
                    index=len(events),
                    peak_deflection_mm=float(x[seg.start]),
                    end_deflection_mm=float(x[seg.stop]),
                    peak_force_N=float(f[seg.start]),
                    retained_force_N=k * float(x[seg.stop]),
                    loading_work_J=since_last,
                    loss_J=loss,
                    event_eta=1.0 - loss / since_last if since_last > 0 else None,
                    cumulative_stored_J=e_spring,
                    cumulative_eta=1.0 - e_loss / e_spring if e_spring > 0 else float("nan"),
                )
            )
            since_last = 0.0

    if counts[LOADING] == 0 or e_spring <= 0:
        raise UndefinedEfficiencyError("trace stores no energy (E_spring = 0); efficiency undefined")
    return EfficiencyReport(
        e_spring_J=e_spring,
        e_loss_J=e_loss,
        eta=1.0 - e_loss / e_spring,
        returned_J=returned,
        net_work_J=sum(s.work_J for s in segments),
        nominal_stiffness_N_per_mm=k,
        events=events,
        segment_counts=counts,
    )


def mass_energy_density(budget: MassBudget) -> float:
    """Spring-side share of the lockable spring's mass."""
    m_s = budget.spring_side_mass_kg
    m_l = budget.clutch_mass_kg
    if m_s <= 0 or m_l <= 0:
        raise ValidationError("mass", "masses must be > 0")
    return m_s / (m_s + m_l)


def locking_force_summary(
    geometry: CapstanGeometry, solenoid: SolenoidSpec, spring: SpringSpec
) -> dict[str, float | bool]:
    """Capstan force ratio next to the actual control-force ratio at full spring force."""
    lam = locking_force_ratio(geometry)
    f_max = spring.stiffness_N_per_mm * spring.max_deflection_mm
    control_ratio = solenoid.pretension_force_N / f_max
    return {
        "lambda_F": lam,
        "max_spring_force_N": f_max,
        "control_force_N": solenoid.pretension_force_N,
        "control_force_ratio": control_ratio,
        "meets_lambda_F_target": lam <= LAMBDA_F_TARGET and control_ratio <= LAMBDA_F_TARGET,
    }
