"""Tabular writers shared by the command-line tools.

Floats go out as ``repr`` so that a CSV round-trips exactly.  Nothing
time- or host-dependent is written, so equal inputs give equal bytes.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np

from . import __version__
from .criteria import EPR_ONE_MODE_BOUND, EPR_TWO_MODE_BOUND, VLF_BOUND

CONVENTIONS = {
    "squeezing": "squeezed-axis variance exp(-r)",
    "quadratures": "X = a + a^dag, Y = -i(a - a^dag), vacuum variance 1",
    "bounds": {"vlf": VLF_BOUND, "duan": 4.0, "epr_two_mode": EPR_TWO_MODE_BOUND,
               "epr_one_mode": EPR_ONE_MODE_BOUND},
}


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render_csv(command: str, config: dict, columns: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# tripartite {__version__} command={command}\n")
    buf.write(f"# squeezing: {CONVENTIONS['squeezing']}\n")
    buf.write(f"# quadratures: {CONVENTIONS['quadratures']}\n")
    b = CONVENTIONS["bounds"]
    buf.write(f"# bounds: vlf < {b['vlf']!r}, duan < {b['duan']!r}, "
              f"epr_two < {b['epr_two_mode']!r}, epr_one < {b['epr_one_mode']!r}\n")
    buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_cell(row[c]) for c in columns) + "\n")
    return buf.getvalue()


def render_json(command: str, config: dict, columns: list, rows: list, seed=None, extra=None) -> str:
    doc = {
        "command": command,
        "config": config,
        "conventions": CONVENTIONS,
        "columns": columns,
        "results": rows,
        "provenance": {"artifact": "tripartite", "version": __version__, "seed": seed},
    }
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def read_csv(text: str):
    """Parse what :func:`render_csv` wrote; returns ``(columns, float array)``."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return cols, data.reshape(-1, len(cols))
