"""Trace CSV files.

Layout::

    # key=value            metadata comment lines (any number, before the header)
    time_s,deflection_mm,force_N,clutch_engaged
    0.000000,0,0,1
    ...

Time is written with microsecond resolution; deflection and force with
``digits`` significant digits (6 by default).  ``clutch_engaged`` is 0 or 1.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from lockspring.errors import TraceFormatError, ValidationError
from lockspring.workloop import WorkLoopTrace

HEADER = "time_s,deflection_mm,force_N,clutch_engaged"
DEFAULT_DIGITS = 6
TIME_DECIMALS = 6


def format_trace(trace: WorkLoopTrace, digits: int = DEFAULT_DIGITS) -> str:
    lines = []
    for key, value in trace.metadata.items():
        value = str(value).replace("\n", " ")
        lines.append(f"# {key}={value}")
    lines.append(HEADER)
    for t, x, f, c in zip(trace.time_s, trace.deflection_mm, trace.force_N, trace.clutch_engaged):
        lines.append(f"{t:.{TIME_DECIMALS}f},{x:.{digits}g},{f:.{digits}g},{int(c)}")
    return "\n".join(lines) + "\n"


def write_trace(trace: WorkLoopTrace, path: str | Path, digits: int = DEFAULT_DIGITS) -> None:
    Path(path).write_text(format_trace(trace, digits))


def parse_trace(text: str, path: str | None = None) -> WorkLoopTrace:
    """Parse trace CSV text; errors name the 1-based file line."""
    metadata: dict[str, str] = {}
    header_seen = False
    rows: list[tuple[float, float, float, bool]] = []
    last_t = -math.inf
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line != HEADER:
                raise TraceFormatError(f"expected header {HEADER!r}, got {line!r}", path, lineno)
            header_seen = True
            continue
        cells = line.split(",")
        if len(cells) != 4:
            raise TraceFormatError(f"expected 4 fields, got {len(cells)}", path, lineno)
        try:
            t, x, f = (float(c) for c in cells[:3])
        except ValueError:
            raise TraceFormatError(f"malformed number in {line!r}", path, lineno) from None
        if not all(math.isfinite(v) for v in (t, x, f)):
            raise TraceFormatError("non-finite value", path, lineno)
        if cells[3].strip() not in ("0", "1"):
            raise TraceFormatError(f"clutch_engaged must be 0 or 1, got {cells[3].strip()!r}", path, lineno)
        if t <= last_t:
            raise TraceFormatError("time not increasing", path, lineno)
        if f < 0:
            raise TraceFormatError(f"negative force {f:g}", path, lineno)
        if x < 0:
            raise TraceFormatError(f"negative deflection {x:g}", path, lineno)
        last_t = t
        rows.append((t, x, f, cells[3].strip() == "1"))
    if not rows:
        raise TraceFormatError("no samples", path)
    arr = np.array(rows, dtype=float)
    try:
        return WorkLoopTrace(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(bool), metadata)
    except ValidationError as e:  # pragma: no cover - rows are checked above
        raise TraceFormatError(str(e), path) from None


def read_trace(path: str | Path) -> WorkLoopTrace:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise TraceFormatError(f"cannot read trace: {e.strerror}", str(p)) from None
    return parse_trace(text, str(p))
