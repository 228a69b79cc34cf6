"""Static SVG figures: force-deflection curve and per-lock energy/efficiency."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from lockspring.analysis import EfficiencyReport  # noqa: E402
from lockspring.workloop import WorkLoopTrace  # noqa: E402


def _split_by_direction(x: np.ndarray, f: np.ndarray):
    """Yield (x, f, loading) runs; idle samples join the preceding run."""
    dx = np.diff(x)
    start = 0
    rising = dx[0] >= 0 if dx.size else True
    for i, d in enumerate(dx):
        if d == 0:
            continue
        now = d > 0
        if now != rising:
            yield x[start:i + 1], f[start:i + 1], rising
            start, rising = i, now
    yield x[start:], f[start:], rising


def plot_work_loop(trace: WorkLoopTrace, report: EfficiencyReport, path: str | Path) -> None:
    fig, (ax_f, ax_e) = plt.subplots(1, 2, figsize=(10, 4))
    first = {True: True, False: True}
    for xs, fs, loading in _split_by_direction(trace.deflection_mm, trace.force_N):
        label = None
        if first[loading]:
            label = "compression" if loading else "extension"
            first[loading] = False
        ax_f.plot(xs, fs, "k-" if loading else "k--", lw=1.0, label=label)
    ax_f.set_xlabel("deflection [mm]")
    ax_f.set_ylabel("force [N]")
    ax_f.legend(loc="upper left", frameon=False)

    peaks = [e.peak_deflection_mm for e in report.events]
    ax_e.plot(peaks, [e.cumulative_stored_J for e in report.events], "r-o", ms=3, label="energy stored")
    ax_e.set_xlabel("lock deflection [mm]")
    ax_e.set_ylabel("energy [J]", color="r")
    ax_eta = ax_e.twinx()
    etas = [100 * (e.event_eta if e.event_eta is not None else np.nan) for e in report.events]
    ax_eta.plot(peaks, etas, "k-s", ms=3, label="efficiency")
    ax_eta.set_ylabel("efficiency [%]")
    ax_eta.set_ylim(0, 100)
    ax_e.set_title(f"eta = {100 * report.eta:.1f} %", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
