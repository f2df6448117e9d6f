"""Export of the big-M MILP in CPLEX LP text format."""

from __future__ import annotations

import numpy as np

from .lp_core import EQ, GE, LE
from .reform import MilpProblem

_REL = {LE: "<=", EQ: "=", GE: ">="}
_WRAP = 200


def num(v: float) -> str:
    return f"{float(v) + 0.0:.15g}"


def _expr(coefs, names):
    terms = []
    for a, name in zip(coefs, names):
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        terms.append(f"{sign} {num(abs(a))} {name}")
    if not terms:
        terms = [f"+ 0 {names[0]}"]
    lines, cur = [], ""
    for t in terms:
        if cur and len(cur) + len(t) + 1 > _WRAP:
            lines.append(cur)
            cur = "   " + t
        else:
            cur = f"{cur} {t}" if cur else t
    lines.append(cur)
    return "\n".join(lines)


def milp_to_lp(milp: MilpProblem) -> str:
    """Render ``milp`` in the declared objective sense, every block row by row.

    Continuous variables are declared free (their sign rows are explicit
    constraints) and ``u`` is listed under ``Binaries``.
    """
    inst = milp.kkt.instance
    names = milp.var_names()
    sense = "Maximize" if inst.declared_upper == "max" else "Minimize"
    obj = inst.upper_sign * milp.objective
    out = [f"\\ {inst.name}: big-M reformulation", sense, " obj: " + _expr(obj, names),
           "Subject To"]
    for blk in milp.blocks:
        for i in range(blk.size):
            out.append(f" {blk.name}_{i + 1}: {_expr(blk.A[i], names)} "
                       f"{_REL[blk.rel]} {num(blk.rhs[i])}")
    out.append("Bounds")
    for name in names[:milp.ncont]:
        out.append(f" {name} free")
    out.append("Binaries")
    if milp.J:
        out.append(" " + " ".join(names[milp.ncont:]))
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(milp: MilpProblem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(milp_to_lp(milp))


def objective_value(milp: MilpProblem, z) -> float:
    """Declared-sense objective of a continuous MILP point."""
    z = np.asarray(z, dtype=float)[:milp.ncont]
    return float(milp.kkt.instance.upper_sign * milp.objective[:milp.ncont] @ z)
