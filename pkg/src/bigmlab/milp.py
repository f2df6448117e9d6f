"""Branch-and-bound and exhaustive enumeration for the big-M MILP."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lp_core import (DEFAULT_OPTIONS, INFEASIBLE, OPTIMAL, UNBOUNDED,
                      SimplexOptions, solve_lp, variable_range)
from .reform import MilpProblem, milp_relaxation

MULTIPLE_WIDTH = 1e-6
INT_TOL = 1e-6
ENUM_CAP = 20


class NodeLimit(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PatternRow:
    """One line of a per-pattern table (one fixed binary assignment)."""

    case: int
    u: tuple
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    lam: np.ndarray | None = None
    z: float = np.nan
    lam_ranges: tuple = ()

    @property
    def multiple(self) -> bool:
        return any(hi - lo > MULTIPLE_WIDTH for lo, hi in self.lam_ranges)

    def to_dict(self):
        d = {"case": self.case, "u": list(self.u), "status": self.status}
        if self.status == OPTIMAL:
            d.update(x=[float(v) for v in self.x], y=[float(v) for v in self.y],
                     lam=[float(v) for v in self.lam], z=float(self.z),
                     multiple=self.multiple,
                     lam_ranges=[[float(lo), float(hi)] for lo, hi in self.lam_ranges])
        return d


@dataclass(frozen=True, eq=False)
class MilpSolution:
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    lam: np.ndarray | None = None
    u: np.ndarray | None = None
    z: float = np.nan               # upper objective, declared sense
    z_internal: float = np.nan      # minimized objective
    nodes: int = 0
    best_bound: float = np.nan      # internal (minimize) sense
    incumbents: tuple = ()          # internal objective after each improvement
    table: tuple = ()
    ties: tuple = ()

    @property
    def optimal(self):
        return self.status == OPTIMAL

    def to_dict(self):
        d = {"status": self.status, "nodes": self.nodes}
        if self.optimal:
            d.update(x=[float(v) for v in self.x], y=[float(v) for v in self.y],
                     lam=[float(v) for v in self.lam], u=[int(v) for v in self.u],
                     z=float(self.z))
        if self.table:
            d["table"] = [row.to_dict() for row in self.table]
            d["ties"] = [list(t) for t in self.ties]
        return d


def _fixed(milp, u, options):
    u = np.asarray(u, dtype=float)
    return solve_lp(milp_relaxation(milp, u, u), options)


def _pack(milp, status, sol, u, **kw):
    x, y, lam = milp.kkt.split(sol.x[:milp.ncont])
    sign = milp.kkt.instance.upper_sign
    return MilpSolution(status=status, x=x, y=y, lam=lam,
                        u=np.asarray(u, dtype=int), z=sign * sol.objective,
                        z_internal=sol.objective, **kw)


def solve_milp_bnb(milp: MilpProblem, options: SimplexOptions = DEFAULT_OPTIONS,
                   node_limit: int = 100_000, int_tol: float = INT_TOL) -> MilpSolution:
    """Depth-first branch-and-bound over the binaries.

    Branches on the most fractional binary (lowest index on ties).  Both
    children are solved when created and the one with the better bound is
    explored first; equal bounds explore ``u_k = 0`` first.
    """
    us = milp.u_slice
    J = milp.J
    root_lb, root_ub = np.zeros(J), np.ones(J)
    root = solve_lp(milp_relaxation(milp, root_lb, root_ub), options)
    nodes = 1
    if root.status == INFEASIBLE:
        return MilpSolution(status=INFEASIBLE, nodes=nodes)
    if root.status == UNBOUNDED:
        return MilpSolution(status=UNBOUNDED, nodes=nodes)

    best, best_u, best_val = None, None, np.inf
    history = []
    bound = np.inf
    stack = [(root, root_lb, root_ub)]
    while stack:
        sol, lb, ub = stack.pop()
        tol = 1e-9 * (1.0 + abs(best_val)) if np.isfinite(best_val) else 0.0
        if sol.objective >= best_val - tol:
            bound = min(bound, sol.objective)
            continue
        u = sol.x[us]
        frac = np.abs(u - np.round(u))
        if frac.max(initial=0.0) <= int_tol:
            ur = np.round(u)
            if np.array_equal(lb, ub):
                fsol = sol
            else:
                fsol = _fixed(milp, ur, options)
                if not fsol.optimal:
                    fsol = sol
            if fsol.objective < best_val:
                best, best_u, best_val = fsol, ur.astype(int), fsol.objective
                history.append(best_val)
            continue
        k = int(np.argmax(frac))
        children = []
        for val in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[k] = cub[k] = val
            csol = solve_lp(milp_relaxation(milp, clb, cub), options)
            nodes += 1
            if nodes > node_limit:
                raise NodeLimit(f"branch-and-bound exceeded {node_limit} nodes")
            if csol.status == UNBOUNDED:
                return MilpSolution(status=UNBOUNDED, nodes=nodes)
            if csol.optimal:
                children.append((csol.objective, -val, csol, clb, cub))
        # pop order: smaller bound first, then u_k = 0 first
        children.sort(key=lambda c: (c[0], c[1]), reverse=True)
        stack.extend((c[2], c[3], c[4]) for c in children)

    if best is None:
        return MilpSolution(status=INFEASIBLE, nodes=nodes)
    return _pack(milp, OPTIMAL, best, best_u, nodes=nodes,
                 best_bound=min(bound, best_val), incumbents=tuple(history))


def solve_pattern_row(milp: MilpProblem, u, case: int,
                      options: SimplexOptions = DEFAULT_OPTIONS) -> PatternRow:
    """MILP restricted to a fixed ``u``; flags non-unique multipliers."""
    uu = np.asarray(u, dtype=float)
    lp = milp_relaxation(milp, uu, uu)
    sol = solve_lp(lp, options)
    if not sol.optimal:
        return PatternRow(case=case, u=tuple(int(v) for v in u), status=sol.status)
    x, y, lam = milp.kkt.split(sol.x[:milp.ncont])
    lam_idx = range(milp.kkt.n + milp.kkt.m, milp.ncont)
    ranges = tuple(variable_range(lp, sol, k, options) for k in lam_idx)
    sign = milp.kkt.instance.upper_sign
    return PatternRow(case=case, u=tuple(int(v) for v in u), status=OPTIMAL,
                      x=x, y=y, lam=lam, z=sign * sol.objective, lam_ranges=ranges)


def enumerate_patterns(milp: MilpProblem, options: SimplexOptions = DEFAULT_OPTIONS,
                       cap: int = ENUM_CAP) -> MilpSolution:
    """Solve every binary pattern with the big-M boxes kept.

    Patterns run in ``itertools.product`` order (u_1 most significant);
    the best objective wins and ties go to the lowest pattern index, all
    tying patterns being listed in ``ties``.
    """
    J = milp.J
    if J > cap:
        raise ValueError(f"J={J} exceeds the enumeration cap {cap}")
    rows = tuple(solve_pattern_row(milp, u, i + 1, options)
                 for i, u in enumerate(itertools.product((0, 1), repeat=J)))
    return _select(milp, rows)


def _select(milp, rows):
    sign = milp.kkt.instance.upper_sign
    feasible = [r for r in rows if r.status == OPTIMAL]
    nodes = len(rows)
    if any(r.status == UNBOUNDED for r in rows):
        return MilpSolution(status=UNBOUNDED, nodes=nodes, table=rows)
    if not feasible:
        return MilpSolution(status=INFEASIBLE, nodes=nodes, table=rows)
    internal = [sign * r.z for r in feasible]
    zbest = min(internal)
    tol = 1e-6 * (1.0 + abs(zbest))
    ties = tuple(r.u for r, zi in zip(feasible, internal) if zi <= zbest + tol)
    win = next(r for r, zi in zip(feasible, internal) if zi <= zbest + tol)
    return MilpSolution(status=OPTIMAL, x=win.x, y=win.y, lam=win.lam,
                        u=np.array(win.u, dtype=int), z=win.z, z_internal=sign * win.z,
                        nodes=nodes, best_bound=sign * win.z, table=rows, ties=ties)
