"""Tables, CSV exports and JSON run reports."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from . import __version__
from .lp_core import OPTIMAL
from .model import LbpInstance, digest


def num(v) -> str:
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v + 0.0:.15g}"


def jsonable(obj):
    """Recursively replace numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def run_report(inst: LbpInstance, method: str, payload: dict, elapsed: float) -> dict:
    return jsonable({
        "tool": "bigmlab",
        "version": __version__,
        "instance": {"name": inst.name, "digest": digest(inst)},
        "method": method,
        **payload,
        "timing_s": elapsed,
    })


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=1, allow_nan=False) + "\n"


# -- per-pattern tables --------------------------------------------------------

def _header(n, m, J):
    return (["case"] + [f"u{j + 1}" for j in range(J)] + [f"x{i + 1}" for i in range(n)]
            + [f"y{i + 1}" for i in range(m)] + [f"lambda{j + 1}" for j in range(J)]
            + ["z", "status"])


def _cells(row, n, m, J):
    head = [str(row.case)] + [str(v) for v in row.u]
    if row.status != OPTIMAL:
        return head + [""] * (n + m + J + 1) + [row.status]
    lam = (["Multiple"] * J if row.multiple else [num(v) for v in row.lam])
    return (head + [num(v) for v in row.x] + [num(v) for v in row.y] + lam
            + [num(row.z), row.status])


def pattern_table_csv(table, n, m, J) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(n, m, J))
    for row in table:
        w.writerow(_cells(row, n, m, J))
    return buf.getvalue()


def pattern_table_text(table, n, m, J) -> str:
    rows = [_header(n, m, J)[:-1]]
    for row in table:
        cells = _cells(row, n, m, J)[:-1]
        if row.status != OPTIMAL:
            cells = cells[:1 + J] + [row.status.capitalize()]
        rows.append(cells)
    width = max(len(c) for r in rows for c in r)
    return "\n".join("  ".join(c.rjust(width) for c in r).rstrip() for r in rows) + "\n"


def tune_trace_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    J = report.iterations[0].cfg.J if report.iterations else 0
    w.writerow(["iter", "indices", "rule"] + [f"MP{j + 1}" for j in range(J)]
               + [f"MD{j + 1}" for j in range(J)] + ["z"])
    for it in report.iterations:
        w.writerow([it.index, " ".join(str(j + 1) for j in it.indices), it.rule]
                   + [num(v) for v in it.cfg.MP] + [num(v) for v in it.cfg.MD]
                   + [num(it.z)])
    return buf.getvalue()


def solution_text(label, x, y, lam, z) -> str:
    lines = [f"{label}"]
    for name, vec in (("x", x), ("y", y), ("lambda", lam)):
        lines.append(f"  {name:<7}= " + ", ".join(num(v) for v in vec))
    lines.append(f"  {'z':<7}= {num(z)}")
    return "\n".join(lines) + "\n"
