"""One-off calibration of the lock-loss model against a target efficiency."""

from __future__ import annotations

from dataclasses import replace

from scipy.optimize import brentq

from lockspring.analysis import AnalysisConfig, efficiency
from lockspring.workloop import Assembly, LockLossModel, Protocol, run_protocol

TARGET_ETA = 0.80


def simulated_eta(
    engagement_slip_mm: float,
    protocol: Protocol | None = None,
    assembly: Assembly | None = None,
    loss: LockLossModel | None = None,
    analysis: AnalysisConfig | None = None,
) -> float:
    protocol = protocol or Protocol.accumulation()
    loss = replace(loss or LockLossModel(), engagement_slip_mm=engagement_slip_mm)
    trace = run_protocol(protocol, assembly, loss)
    return efficiency(trace, analysis).eta


def calibrate_engagement_slip(
    target_eta: float = TARGET_ETA,
    protocol: Protocol | None = None,
    assembly: Assembly | None = None,
    loss: LockLossModel | None = None,
    bracket: tuple[float, float] = (0.0, 2.4),
    xtol: float = 1e-6,
) -> float:
    """Engagement slip (mm) at which the simulated protocol analyses to ``target_eta``.

    Efficiency falls monotonically with slip, so a bracketing root finder is
    enough.  Past about 2.45 mm the 10 mm lock drop of the default protocol
    becomes shallower than 3k, stops being counted as a loss, and the
    efficiency jumps; the default bracket stays below that.
    """
    return brentq(
        lambda d: simulated_eta(d, protocol, assembly, loss) - target_eta,
        *bracket,
        xtol=xtol,
    )
