"""KKT single-level system and the big-M (Fortuny-Amat) MILP.

Both objects are symbolic lists of named row blocks over a shared
variable vector.  The continuous variables are ordered ``(x, y, lam)``;
the MILP appends the binaries ``u``.  Pattern LPs for a fixed binary
assignment are built from the KKT system directly so they never depend
on any big-M constant unless boxes are requested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp_core import (DEFAULT_OPTIONS, EQ, LE, LinearProgram, LpSolution,
                      SimplexOptions, solve_lp)
from .model import LbpInstance, normalize_sense, require_valid


@dataclass(frozen=True, eq=False)
class RowBlock:
    name: str
    A: np.ndarray
    rel: str
    rhs: np.ndarray

    @property
    def size(self):
        return self.rhs.size


@dataclass(frozen=True, eq=False)
class KktSystem:
    """Upper rows, lower primal rows, stationarity and dual sign rows.

    ``pairs[j] = (dual variable index, lower row index)`` lists the
    complementarity pairs.
    """

    instance: LbpInstance
    blocks: tuple
    objective: np.ndarray
    pairs: tuple

    @property
    def n(self):
        return self.instance.n

    @property
    def m(self):
        return self.instance.m

    @property
    def J(self):
        return self.instance.J

    @property
    def nvars(self):
        return self.n + self.m + self.J

    def block(self, name) -> RowBlock:
        for blk in self.blocks:
            if blk.name == name:
                return blk
        raise KeyError(name)

    @property
    def lam_slice(self):
        return slice(self.n + self.m, self.nvars)

    def split(self, z):
        """Split a continuous vector into ``(x, y, lam)``."""
        n, m = self.n, self.m
        return z[:n], z[n:n + m], z[n + m:n + m + self.J]

    def var_names(self):
        return ([f"x{i + 1}" for i in range(self.n)]
                + [f"y{i + 1}" for i in range(self.m)]
                + [f"lam{j + 1}" for j in range(self.J)])


@dataclass(frozen=True, eq=False)
class BigMConfig:
    MP: np.ndarray
    MD: np.ndarray

    def __post_init__(self):
        MP = np.array(self.MP, dtype=float).reshape(-1)
        MD = np.array(self.MD, dtype=float).reshape(-1)
        if MP.shape != MD.shape:
            raise ValueError("MP and MD must have the same length")
        for label, v in (("MP", MP), ("MD", MD)):
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise ValueError(f"{label} entries must be finite and positive")
        MP.setflags(write=False)
        MD.setflags(write=False)
        object.__setattr__(self, "MP", MP)
        object.__setattr__(self, "MD", MD)

    @classmethod
    def uniform(cls, J, mp, md):
        return cls(np.broadcast_to(np.asarray(mp, float), (J,)).copy(),
                   np.broadcast_to(np.asarray(md, float), (J,)).copy())

    @property
    def J(self):
        return self.MP.size

    def to_dict(self):
        return {"MP": [float(v) for v in self.MP], "MD": [float(v) for v in self.MD]}


@dataclass(frozen=True, eq=False)
class MilpProblem:
    kkt: KktSystem
    cfg: BigMConfig
    blocks: tuple
    objective: np.ndarray

    @property
    def ncont(self):
        return self.kkt.nvars

    @property
    def J(self):
        return self.kkt.J

    @property
    def nvars(self):
        return self.ncont + self.J

    @property
    def u_slice(self):
        return slice(self.ncont, self.nvars)

    @property
    def nrows(self):
        return sum(b.size for b in self.blocks)

    def block(self, name) -> RowBlock:
        for blk in self.blocks:
            if blk.name == name:
                return blk
        raise KeyError(name)

    def var_names(self):
        return self.kkt.var_names() + [f"u{j + 1}" for j in range(self.J)]


def kkt_reformulate(instance: LbpInstance) -> KktSystem:
    """Replace the follower LP by its optimality conditions."""
    require_valid(instance)
    inst = normalize_sense(instance)
    n, m, J, K = inst.n, inst.m, inst.J, inst.K
    Z = np.zeros

    up = np.hstack([inst.C, inst.d, Z((K, J))])
    lo = np.hstack([inst.R, inst.S, Z((J, J))])
    # q + S^T lam = 0
    st = np.hstack([Z((m, n)), Z((m, m)), inst.S.T])
    nn = np.hstack([Z((J, n + m)), -np.eye(J)])
    blocks = (
        RowBlock("upper", up, LE, inst.e.copy()),
        RowBlock("lower_primal", lo, LE, inst.t.copy()),
        RowBlock("stationarity", st, EQ, -inst.q),
        RowBlock("dual_nonneg", nn, LE, Z(J)),
    )
    obj = np.concatenate([inst.a, inst.b, Z(J)])
    pairs = tuple((n + m + j, j) for j in range(J))
    return KktSystem(instance=inst, blocks=blocks, objective=obj, pairs=pairs)


def bigm_reformulate(kkt: KktSystem, cfg: BigMConfig) -> MilpProblem:
    """Linearize complementarity with binaries ``u`` and constants MP, MD.

    lam_j <= MD_j u_j   and   t_j - r_j x - s_j y <= (1 - u_j) MP_j.
    """
    if cfg.J != kkt.J:
        raise ValueError(f"big-M config has {cfg.J} entries, instance has J={kkt.J}")
    inst = kkt.instance
    J, nc = kkt.J, kkt.nvars
    widen = [RowBlock(b.name, np.hstack([b.A, np.zeros((b.size, J))]), b.rel, b.rhs)
             for b in kkt.blocks]
    dual = np.zeros((J, nc + J))
    dual[:, kkt.lam_slice] = np.eye(J)
    dual[:, nc:] = -np.diag(cfg.MD)
    primal = np.zeros((J, nc + J))
    primal[:, :inst.n] = -inst.R
    primal[:, inst.n:inst.n + inst.m] = -inst.S
    primal[:, nc:] = np.diag(cfg.MP)
    blocks = tuple(widen) + (
        RowBlock("dual_bigm", dual, LE, np.zeros(J)),
        RowBlock("primal_bigm", primal, LE, cfg.MP - inst.t),
    )
    obj = np.concatenate([kkt.objective, np.zeros(J)])
    return MilpProblem(kkt=kkt, cfg=cfg, blocks=blocks, objective=obj)


def induced_pattern(lam, tol: float = 0.0) -> np.ndarray:
    """u_j = 1 iff lam_j > tol; a zero multiplier maps to u_j = 0."""
    return (np.asarray(lam) > tol).astype(int)


def milp_violation(milp: MilpProblem, z, u) -> float:
    """Largest row violation of the MILP at continuous point ``z`` and binaries ``u``."""
    v = np.concatenate([np.asarray(z, float), np.asarray(u, float)])
    worst = 0.0
    for blk in milp.blocks:
        r = blk.A @ v - blk.rhs
        viol = np.abs(r) if blk.rel == EQ else np.maximum(r, 0.0)
        worst = max(worst, float(viol.max(initial=0.0)))
    return worst


def _blocks_to_lp(blocks, c, lb, ub, bound_blocks=("dual_nonneg",)):
    """Stack blocks into one LP; single-variable sign blocks become bounds."""
    rows, rhs, rel = [], [], []
    lb = np.array(lb, dtype=float)
    ub = np.array(ub, dtype=float)
    for blk in blocks:
        if blk.name in bound_blocks:
            for i in range(blk.size):
                k = int(np.flatnonzero(blk.A[i])[0])
                coef, lim = blk.A[i, k], blk.rhs[i] / blk.A[i, k]
                if coef < 0:
                    lb[k] = max(lb[k], lim)
                else:
                    ub[k] = min(ub[k], lim)
            continue
        rows.append(blk.A)
        rhs.append(blk.rhs)
        rel += [blk.rel] * blk.size
    A = np.vstack(rows) if rows else np.zeros((0, len(c)))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return LinearProgram(c, A, b, rel, lb, ub)


def milp_relaxation(milp: MilpProblem, u_lb=None, u_ub=None) -> LinearProgram:
    """LP relaxation with ``u`` in [u_lb, u_ub] (default [0, 1])."""
    lb = np.full(milp.nvars, -np.inf)
    ub = np.full(milp.nvars, np.inf)
    lb[milp.u_slice] = 0.0 if u_lb is None else u_lb
    ub[milp.u_slice] = 1.0 if u_ub is None else u_ub
    return _blocks_to_lp(milp.blocks, milp.objective, lb, ub)


def pattern_lp(kkt: KktSystem, pattern, MP=None, MD=None) -> LinearProgram:
    """LP over (x, y, lam) with complementarity resolved by ``pattern``.

    u_j = 1: lower row j holds with equality, lam_j >= 0 (<= MD_j if given).
    u_j = 0: lam_j = 0, lower row j is an inequality (slack <= MP_j if given).
    """
    u = np.asarray(pattern, dtype=int).reshape(-1)
    if u.size != kkt.J:
        raise ValueError(f"pattern length {u.size} != J={kkt.J}")
    inst = kkt.instance
    n, m = kkt.n, kkt.m
    lb = np.full(kkt.nvars, -np.inf)
    ub = np.full(kkt.nvars, np.inf)
    lam = kkt.lam_slice
    lb[lam] = 0.0
    ub[lam] = np.where(u == 1, np.inf if MD is None else np.asarray(MD, float), 0.0)
    blocks = []
    for blk in kkt.blocks:
        if blk.name == "lower_primal":
            eq = u == 1
            if eq.any():
                blocks.append(RowBlock("lower_active", blk.A[eq], EQ, blk.rhs[eq]))
            if (~eq).any():
                blocks.append(RowBlock("lower_inactive", blk.A[~eq], LE, blk.rhs[~eq]))
        elif blk.name != "dual_nonneg":
            blocks.append(blk)
    if MP is not None:
        free = np.flatnonzero(u == 0)
        if free.size:
            A = np.zeros((free.size, kkt.nvars))
            A[:, :n] = -inst.R[free]
            A[:, n:n + m] = -inst.S[free]
            blocks.append(RowBlock("slack_box", A, LE,
                                   np.asarray(MP, float)[free] - inst.t[free]))
    return _blocks_to_lp(blocks, kkt.objective, lb, ub, bound_blocks=())


def solve_lp_fixed_pattern(kkt: KktSystem, pattern, MP=None, MD=None,
                           options: SimplexOptions = DEFAULT_OPTIONS) -> LpSolution:
    """Solve the KKT system with complementarity fixed by ``pattern``.

    No big-M constant enters unless ``MP``/``MD`` boxes are passed.
    The objective is the normalized (minimize) upper objective.
    """
    return solve_lp(pattern_lp(kkt, pattern, MP, MD), options)

