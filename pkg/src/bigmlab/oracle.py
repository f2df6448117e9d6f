"""Bound-free global solution of a linear bilevel program, and certificates.

The oracle enumerates every complementarity pattern of the KKT system and
solves the resulting LP with no big-M constant anywhere.  Every KKT point
selects some pattern, so the best pattern optimum is the optimistic
bilevel optimum when upper rows do not involve ``y``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lp_core import (DEFAULT_OPTIONS, INFEASIBLE, OPTIMAL, UNBOUNDED,
                      LinearProgram, SimplexOptions, solve_lp)
from .model import (BilevelSolution, LbpInstance, make_solution,
                    normalize_sense, require_valid)
from .reform import kkt_reformulate, solve_lp_fixed_pattern

ORACLE_CAP = 20


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OracleResult:
    solution: BilevelSolution
    pattern: tuple | None
    trace: tuple                    # (pattern, status, z declared) per pattern
    ties: tuple = ()
    max_abs_lam: np.ndarray | None = None
    max_slack: np.ndarray | None = None

    @property
    def status(self):
        return self.solution.status

    @property
    def z(self):
        return self.solution.z_upper

    def to_dict(self):
        d = {"solution": self.solution.to_dict(),
             "pattern": None if self.pattern is None else list(self.pattern),
             "ties": [list(t) for t in self.ties],
             "trace": [{"u": list(u), "status": s, "z": None if np.isnan(z) else z}
                       for u, s, z in self.trace]}
        if self.max_abs_lam is not None:
            d["max_abs_lambda"] = [float(v) for v in self.max_abs_lam]
            d["max_slack"] = [float(v) for v in self.max_slack]
        return d


def _empty(inst, status):
    nan = np.full
    return BilevelSolution(x=nan(inst.n, np.nan), y=nan(inst.m, np.nan),
                           lam=nan(inst.J, np.nan), z_upper=np.nan,
                           z_lower=np.nan, status=status)


def solve_global_oracle(instance: LbpInstance, options: SimplexOptions = DEFAULT_OPTIONS,
                        cap: int = ORACLE_CAP) -> OracleResult:
    """Enumerate all 2^J complementarity patterns and keep the best.

    If any pattern LP is unbounded the bilevel problem is reported
    unbounded; the remaining pattern results stay in the trace.
    """
    require_valid(instance)
    J = instance.J
    if J > cap:
        raise OracleError(f"J={J} exceeds the oracle cap {cap}")
    kkt = kkt_reformulate(instance)
    sign = kkt.instance.upper_sign
    trace, feasible = [], []
    unbounded = False
    for u in itertools.product((0, 1), repeat=J):
        sol = solve_lp_fixed_pattern(kkt, u, options=options)
        z = sign * sol.objective if sol.optimal else np.nan
        trace.append((u, sol.status, z))
        if sol.optimal:
            feasible.append((u, sol))
        elif sol.status == UNBOUNDED:
            unbounded = True
    trace = tuple(trace)
    if unbounded:
        return OracleResult(_empty(instance, UNBOUNDED), None, trace)
    if not feasible:
        return OracleResult(_empty(instance, INFEASIBLE), None, trace)

    best = min(sol.objective for _, sol in feasible)
    tol = 1e-6 * (1.0 + abs(best))
    ties = tuple(u for u, sol in feasible if sol.objective <= best + tol)
    u_win, win = next((u, sol) for u, sol in feasible if sol.objective <= best + tol)
    x, y, lam = kkt.split(win.x)

    lams = np.array([np.abs(kkt.split(s.x)[2]) for _, s in feasible])
    slacks = np.array([instance.lower_slack(*kkt.split(s.x)[:2]) for _, s in feasible])
    return OracleResult(
        solution=make_solution(instance, x, y, lam, OPTIMAL),
        pattern=u_win, trace=trace, ties=ties,
        max_abs_lam=lams.max(axis=0) if J else np.zeros(0),
        max_slack=np.maximum(slacks.max(axis=0), 0.0) if J else np.zeros(0),
    )


# -- verification ---------------------------------------------------------------

@dataclass(frozen=True)
class VerifyReport:
    feasible: bool
    upper_violation: float
    lower_violation: float
    lower_gap: float
    lower_status: str
    reason: str = ""
    z_upper: float = np.nan

    def to_dict(self):
        return {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                for k, v in self.__dict__.items()}


def follower_lp(instance: LbpInstance, x) -> LinearProgram:
    """Lower-level LP in ``y`` at fixed ``x`` (minimize form)."""
    inst = normalize_sense(instance)
    x = np.asarray(x, dtype=float)
    m = inst.m
    return LinearProgram(inst.q, inst.S, inst.t - inst.R @ x, ("<=",) * inst.J,
                         np.full(m, -np.inf), np.full(m, np.inf))


def verify_bilevel_feasible(instance: LbpInstance, x, y, tol: float = 1e-6,
                            options: SimplexOptions = DEFAULT_OPTIONS) -> VerifyReport:
    """Check upper rows, follower rows and follower optimality of ``y`` at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != instance.n or y.size != instance.m:
        raise ValueError("point dimensions do not match the instance")
    inst = normalize_sense(instance)
    up = float(np.maximum(-inst.upper_slack(x, y), 0).max(initial=0.0))
    lo = float(np.maximum(-inst.lower_slack(x, y), 0).max(initial=0.0))
    z = instance.upper_value(x, y)
    fl = solve_lp(follower_lp(instance, x), options)
    if fl.status == INFEASIBLE:
        return VerifyReport(False, up, lo, np.nan, fl.status,
                            "x infeasible for follower", z)
    if fl.status == UNBOUNDED:
        return VerifyReport(False, up, lo, np.nan, fl.status,
                            "follower unbounded at x", z)
    gap = float(inst.q @ y - fl.objective)
    scale = 1.0 + abs(fl.objective)
    reasons = []
    if up > tol:
        reasons.append("upper constraint violated")
    if lo > tol:
        reasons.append("follower constraint violated")
    if gap > tol * scale:
        reasons.append("y not optimal for follower")
    return VerifyReport(not reasons, up, lo, gap, fl.status, "; ".join(reasons), z)


@dataclass(frozen=True)
class Certificate:
    verdict: str                 # global | suboptimal | infeasible
    gap: float                   # oracle-better amount, declared sense
    candidate_z: float
    oracle_z: float
    verify: VerifyReport | None = None

    def to_dict(self):
        d = {"verdict": self.verdict, "gap": self.gap,
             "candidate_z": self.candidate_z, "oracle_z": self.oracle_z}
        if self.verify is not None:
            d["verify"] = self.verify.to_dict()
        return {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                for k, v in d.items()}


def certify_candidate(instance: LbpInstance, candidate: BilevelSolution,
                      tol: float = 1e-6, oracle: OracleResult | None = None,
                      options: SimplexOptions = DEFAULT_OPTIONS) -> Certificate:
    """Compare a candidate against the oracle optimum.

    The candidate objective is recomputed from its ``(x, y)``; the gap is
    positive when the oracle is better in the declared sense.
    """
    rep = verify_bilevel_feasible(instance, candidate.x, candidate.y, tol, options)
    if oracle is None:
        oracle = solve_global_oracle(instance, options)
    if not rep.feasible:
        return Certificate("infeasible", np.nan, rep.z_upper, oracle.z, rep)
    if oracle.status == UNBOUNDED:
        return Certificate("suboptimal", np.inf, rep.z_upper, oracle.z, rep)
    if oracle.status != OPTIMAL:
        raise OracleError(f"oracle status {oracle.status} for a feasible candidate")
    gap = oracle.z - rep.z_upper
    if instance.declared_upper == "min":
        gap = -gap
    verdict = "global" if gap <= tol * (1.0 + abs(oracle.z)) else "suboptimal"
    return Certificate(verdict, float(gap), rep.z_upper, oracle.z, rep)
