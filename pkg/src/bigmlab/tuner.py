"""Trial-and-error big-M tuning and a local-solution-based estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp_core import (DEFAULT_OPTIONS, INFEASIBLE, OPTIMAL, UNBOUNDED,
                      LinearProgram, SimplexOptions, solve_lp)
from .milp import solve_milp_bnb
from .model import (BilevelSolution, LbpInstance, make_solution,
                    normalize_sense, require_valid)
from .oracle import Certificate, certify_candidate, follower_lp
from .reform import (BigMConfig, bigm_reformulate, induced_pattern,
                     kkt_reformulate, solve_lp_fixed_pattern)

ACCEPTED = "accepted"
MILP_INFEASIBLE = "milp_infeasible"
MILP_UNBOUNDED = "milp_unbounded"
MAX_ITER = "max_iter"


class EstimatorError(RuntimeError):
    pass


def tol_bind(bound):
    return 1e-6 * (1.0 + bound)


@dataclass(frozen=True, eq=False)
class TuneIteration:
    index: int
    cfg: BigMConfig
    status: str
    z: float
    u: tuple
    slack: np.ndarray | None
    lam: np.ndarray | None
    rule: str              # step3 | step4 | accepted | infeasible | unbounded
    indices: tuple         # bound indices increased after this iteration

    def to_dict(self):
        d = {"iter": self.index, "status": self.status, "rule": self.rule,
             "indices": [j + 1 for j in self.indices], **self.cfg.to_dict(),
             "z": None if np.isnan(self.z) else float(self.z), "u": list(self.u)}
        return d


@dataclass(frozen=True, eq=False)
class TuneReport:
    status: str
    iterations: tuple
    solution: BilevelSolution | None
    growth: float
    max_iter: int
    certificate: Certificate | None = None

    @property
    def final_cfg(self):
        return self.iterations[-1].cfg if self.iterations else None

    @property
    def contradicted(self) -> bool:
        """Accepted, but certification says it is not the global optimum."""
        return (self.status == ACCEPTED and self.certificate is not None
                and self.certificate.verdict != "global")

    def to_dict(self):
        d = {"status": self.status, "growth": self.growth, "max_iter": self.max_iter,
             "iterations": [it.to_dict() for it in self.iterations],
             "solution": None if self.solution is None else self.solution.to_dict()}
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d


def tune_trial_and_error(instance: LbpInstance, cfg0: BigMConfig, growth: float = 10.0,
                         max_iter: int = 50, certify: bool = False,
                         grow_on_infeasible: bool = False,
                         options: SimplexOptions = DEFAULT_OPTIONS) -> TuneReport:
    """Run the usual enlarge-while-binding loop.

    Each iteration solves the MILP.  If some j has u_j = 0 and a slack
    at MP_j, those MP_j are multiplied by ``growth``; otherwise if some j
    has u_j = 1 and lam_j at MD_j, those MD_j grow; otherwise the MILP
    solution is accepted.  Acceptance is not a proof of optimality: the
    accepted solution has status ``accepted_unverified`` and only the
    optional certificate can tell.

    An infeasible MILP stops the loop unless ``grow_on_infeasible`` is
    set, in which case every MP_j and MD_j grows.
    """
    if growth <= 1:
        raise ValueError("growth must exceed 1")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    require_valid(instance)
    kkt = kkt_reformulate(instance)
    J = instance.J
    MP, MD = np.array(cfg0.MP, float), np.array(cfg0.MD, float)
    if MP.size != J:
        raise ValueError(f"cfg0 has {MP.size} entries, instance has J={J}")
    iters = []
    status, accepted = MAX_ITER, None
    for it in range(1, max_iter + 1):
        cfg = BigMConfig(MP.copy(), MD.copy())
        sol = solve_milp_bnb(bigm_reformulate(kkt, cfg), options)
        if not sol.optimal:
            if sol.status == INFEASIBLE and grow_on_infeasible:
                idx = tuple(range(J))
                iters.append(TuneIteration(it, cfg, sol.status, np.nan, (), None, None,
                                           "infeasible", idx))
                MP *= growth
                MD *= growth
                continue
            rule = "infeasible" if sol.status == INFEASIBLE else "unbounded"
            iters.append(TuneIteration(it, cfg, sol.status, np.nan, (), None, None, rule, ()))
            status = MILP_INFEASIBLE if sol.status == INFEASIBLE else MILP_UNBOUNDED
            break
        slack = instance.lower_slack(sol.x, sol.y)
        u = sol.u
        step3 = tuple(int(j) for j in range(J)
                      if u[j] == 0 and slack[j] >= MP[j] - tol_bind(MP[j]))
        step4 = tuple(int(j) for j in range(J)
                      if u[j] == 1 and sol.lam[j] >= MD[j] - tol_bind(MD[j]))
        common = dict(index=it, cfg=cfg, status=sol.status, z=sol.z,
                      u=tuple(int(v) for v in u), slack=slack, lam=sol.lam)
        if step3:
            iters.append(TuneIteration(rule="step3", indices=step3, **common))
            MP[list(step3)] *= growth
        elif step4:
            iters.append(TuneIteration(rule="step4", indices=step4, **common))
            MD[list(step4)] *= growth
        else:
            iters.append(TuneIteration(rule="accepted", indices=(), **common))
            status = ACCEPTED
            accepted = make_solution(instance, sol.x, sol.y, sol.lam,
                                     "accepted_unverified")
            break
    cert = None
    if certify and accepted is not None:
        cert = certify_candidate(instance, accepted, options=options)
    return TuneReport(status=status, iterations=tuple(iters), solution=accepted,
                      growth=growth, max_iter=max_iter, certificate=cert)


# -- local estimator -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalSearchResult:
    cfg: BigMConfig
    solution: BilevelSolution
    pattern: tuple
    start: tuple
    visits: int


def _start_pattern(instance, options):
    inst = normalize_sense(instance)
    J = inst.J
    upper = LinearProgram(inst.a, inst.C, inst.e, ("<=",) * inst.K,
                          np.full(inst.n, -np.inf), np.full(inst.n, np.inf))
    us = solve_lp(upper, options)
    if not us.optimal:
        return None
    fl = solve_lp(follower_lp(instance, us.x), options)
    if not fl.optimal:
        return None
    return tuple(int(v) for v in induced_pattern(fl.duals, options.tol_feas)) if J else ()


def _local_search(kkt, start, options):
    """Best-improvement single-flip search from ``start``."""
    def value(u):
        sol = solve_lp_fixed_pattern(kkt, u, options=options)
        if sol.status == UNBOUNDED:
            raise EstimatorError("pattern LP unbounded: bilevel problem is unbounded")
        return (sol.objective if sol.optimal else np.inf), sol

    cur = tuple(start)
    cur_val, cur_sol = value(cur)
    visits = 1
    while True:
        best = None
        for j in range(len(cur)):
            nb = cur[:j] + (1 - cur[j],) + cur[j + 1:]
            val, sol = value(nb)
            if val < cur_val - 1e-9 * (1.0 + abs(cur_val) if np.isfinite(cur_val) else 0.0):
                if best is None or val < best[0]:
                    best = (val, nb, sol)
        if best is None:
            return cur, cur_val, cur_sol, visits
        cur_val, cur, cur_sol = best
        visits += 1


def estimate_bigm_local(instance: LbpInstance, safety: float = 10.0,
                        options: SimplexOptions = DEFAULT_OPTIONS) -> LocalSearchResult:
    """Big-M values scaled from a locally optimal KKT point.

    The start pattern comes from the follower multipliers at the
    leader's upper-only optimum (all zeros if that LP is not solvable,
    then all ones).  Single-binary flips are accepted while they strictly
    improve the upper objective.  Returns MP_j = safety * max(slack_j, 1)
    and MD_j = safety * max(|lam_j|, 1) at the local point.
    """
    if safety < 1:
        raise ValueError("safety factor must be at least 1")
    require_valid(instance)
    kkt = kkt_reformulate(instance)
    J = instance.J
    starts = []
    first = _start_pattern(instance, options)
    for s in (first, (0,) * J, (1,) * J):
        if s is not None and s not in starts:
            starts.append(s)
    for start in starts:
        pattern, val, sol, visits = _local_search(kkt, start, options)
        if np.isfinite(val):
            x, y, lam = kkt.split(sol.x)
            slack = np.maximum(instance.lower_slack(x, y), 0.0)
            cfg = BigMConfig(safety * np.maximum(slack, 1.0),
                             safety * np.maximum(np.abs(lam), 1.0))
            return LocalSearchResult(cfg=cfg, solution=make_solution(instance, x, y, lam, OPTIMAL),
                                     pattern=pattern, start=start, visits=visits)
    raise EstimatorError("no start pattern led to a feasible KKT point")
