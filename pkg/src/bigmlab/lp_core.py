"""Dense two-phase tableau simplex with multipliers.

Problems have the form

    min  c.x   s.t.  A_i x  (<=, =, >=)  b_i,   lb <= x <= ub

and multipliers follow the Lagrangian convention L = c.x + lam.(A x - b):
``lam_i >= 0`` on ``<=`` rows, ``lam_i <= 0`` on ``>=`` rows, free on
equalities.  Reduced costs are ``c + A.T lam``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

log = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class SimplexError(RuntimeError):
    pass


class IterationLimit(SimplexError):
    pass


class NumericalBreakdown(SimplexError):
    pass


@dataclass(frozen=True)
class SimplexOptions:
    tol_feas: float = 1e-7
    tol_comp: float = 1e-7
    tol_gap: float = 1e-6
    pivot_eps: float = 1e-9
    cost_tol: float = 1e-9
    face_tol: float = 1e-9
    max_iter: int = 10_000
    dantzig_pivots: int = 500
    verbose: bool = False

    @classmethod
    def from_env(cls, prefix="BIGMLAB_"):
        """Defaults overridden by ``BIGMLAB_TOL_FEAS`` and friends."""
        kw = {}
        for key in ("tol_feas", "tol_comp", "tol_gap", "pivot_eps", "cost_tol",
                    "face_tol"):
            raw = os.environ.get(prefix + key.upper())
            if raw:
                kw[key] = float(raw)
        for key in ("max_iter", "dantzig_pivots"):
            raw = os.environ.get(prefix + key.upper())
            if raw:
                kw[key] = int(raw)
        return cls(**kw)


DEFAULT_OPTIONS = SimplexOptions()


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    rel: tuple
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = np.zeros((0, c.size))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "rel", tuple(self.rel))
        object.__setattr__(self, "lb", np.asarray(self.lb, dtype=float).reshape(-1))
        object.__setattr__(self, "ub", np.asarray(self.ub, dtype=float).reshape(-1))
        nv, nr = c.size, b.size
        if A.shape != (nr, nv) or len(self.rel) != nr:
            raise ValueError(f"inconsistent LP dimensions: A {A.shape}, "
                             f"b {nr}, rel {len(self.rel)}, c {nv}")
        if self.lb.size != nv or self.ub.size != nv:
            raise ValueError("bound vectors must match the variable count")
        if any(r not in (LE, EQ, GE) for r in self.rel):
            raise ValueError(f"unknown row relation in {self.rel}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A))
                and np.all(np.isfinite(b))):
            raise ValueError("LP coefficients must be finite")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise ValueError("invalid infinite bound")

    @property
    def nvars(self):
        return self.c.size

    @property
    def nrows(self):
        return self.b.size

    @classmethod
    def build(cls, c, A=None, b=None, rel=None, lb=None, ub=None):
        """Convenience constructor: rows default to ``<=``, variables free."""
        c = np.asarray(c, dtype=float).reshape(-1)
        n = c.size
        A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
        b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
        rel = (LE,) * A.shape[0] if rel is None else rel
        lb = np.full(n, -np.inf) if lb is None else lb
        ub = np.full(n, np.inf) if ub is None else ub
        return cls(c, A, b, rel, lb, ub)

    def with_bounds(self, lb=None, ub=None):
        return replace(self, lb=self.lb if lb is None else lb,
                       ub=self.ub if ub is None else ub)

    def add_rows(self, A, b, rel):
        A = np.asarray(A, dtype=float).reshape(-1, self.nvars)
        return replace(self, A=np.vstack([self.A, A]),
                       b=np.concatenate([self.b, np.asarray(b, dtype=float)]),
                       rel=self.rel + tuple(rel))


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = np.nan
    active: tuple = ()
    iterations: int = 0
    reduced_costs: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# -- standard form ------------------------------------------------------------

@dataclass
class _StdForm:
    A: np.ndarray          # rows x std columns, rhs nonnegative
    b: np.ndarray
    c: np.ndarray
    const: float
    T: np.ndarray          # original x = x0 + T @ xs
    x0: np.ndarray
    row_sign: np.ndarray   # +1 kept, -1 flipped
    nrows_orig: int


def _standardize(lp: LinearProgram):
    n = lp.nvars
    cols = []           # (orig var, sign)
    x0 = np.zeros(n)
    extra_rows = []     # (std column index, rhs) rows: xs_k <= rhs
    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isfinite(lo) and np.isfinite(hi) and hi - lo <= 0:
            if hi < lo:
                x0[j] = lo
                cols.append((j, 1.0))
                extra_rows.append((len(cols) - 1, hi - lo))
            else:
                x0[j] = lo
            continue
        if np.isfinite(lo):
            x0[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            x0[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ns = len(cols)
    T = np.zeros((n, ns))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    A = lp.A @ T
    b = lp.b - lp.A @ x0
    rel = list(lp.rel)
    if extra_rows:
        E = np.zeros((len(extra_rows), ns))
        for i, (k, _) in enumerate(extra_rows):
            E[i, k] = 1.0
        A = np.vstack([A, E])
        b = np.concatenate([b, [r for _, r in extra_rows]])
        rel += [LE] * len(extra_rows)
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    flip = {LE: GE, GE: LE, EQ: EQ}
    rel = [flip[r] if s < 0 else r for r, s in zip(rel, sign)]
    return _StdForm(A=A, b=b, c=T.T @ lp.c, const=float(lp.c @ x0), T=T,
                    x0=x0, row_sign=sign, nrows_orig=lp.nrows), rel


class _Tableau:
    """Tableau with slack/surplus/artificial columns and an objective row."""

    def __init__(self, std: _StdForm, rel, opts: SimplexOptions):
        self.opts = opts
        m, ns = std.A.shape
        n_slack = sum(r != EQ for r in rel)
        n_art = sum(r != LE for r in rel)
        self.ns = ns
        self.ncols = ns + n_slack + n_art
        T = np.zeros((m + 1, self.ncols + 1))
        T[:m, :ns] = std.A
        T[:m, -1] = std.b
        self.basis = np.zeros(m, dtype=int)
        self.init_cols = np.zeros(m, dtype=int)
        self.artificial = np.zeros(self.ncols, dtype=bool)
        s = ns
        a = ns + n_slack
        for i, r in enumerate(rel):
            if r == LE:
                T[i, s] = 1.0
                self.basis[i] = self.init_cols[i] = s
                s += 1
            else:
                if r == GE:
                    T[i, s] = -1.0
                    s += 1
                T[i, a] = 1.0
                self.artificial[a] = True
                self.basis[i] = self.init_cols[i] = a
                a += 1
        self.T = T
        self.m = m
        self.iterations = 0

    def set_costs(self, cost):
        """Install reduced costs for ``cost`` given the current basis."""
        row = np.zeros(self.ncols + 1)
        row[:self.ncols] = cost
        cb = cost[self.basis]
        row -= cb @ self.T[:self.m]
        self.T[self.m] = row

    def pivot(self, r, k):
        T = self.T
        piv = T[r, k]
        if abs(piv) < self.opts.pivot_eps:
            raise NumericalBreakdown(f"pivot magnitude {abs(piv):.3g} too small")
        T[r] /= piv
        col = T[:, k].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, k] = 0.0
        T[r, k] = 1.0
        self.basis[r] = k
        self.iterations += 1
        if self.opts.verbose:
            log.debug("pivot row %d col %d obj %.12g", r, k, -T[self.m, -1])

    def run(self, allowed):
        """Primal simplex from the current feasible basis."""
        opts = self.opts
        T, m = self.T, self.m
        while True:
            if self.iterations >= opts.max_iter:
                raise IterationLimit(f"simplex exceeded {opts.max_iter} pivots")
            d = T[m, :self.ncols]
            cand = np.flatnonzero(allowed & (d < -opts.cost_tol))
            if cand.size == 0:
                return OPTIMAL
            bland = self.iterations >= opts.dantzig_pivots
            k = cand[0] if bland else cand[np.argmin(d[cand])]
            col = T[:m, k]
            rows = np.flatnonzero(col > opts.pivot_eps)
            if rows.size == 0:
                return UNBOUNDED
            ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
            best = ratios.min()
            tie = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            if bland or tie.size == 1:
                r = tie[np.argmin(self.basis[tie])]
            else:
                r = tie[np.argmax(col[tie])]
            self.pivot(r, k)

    def drive_out_artificials(self):
        T, m = self.T, self.m
        real = ~self.artificial
        for i in range(m):
            if not self.artificial[self.basis[i]]:
                continue
            row = np.abs(T[i, :self.ncols]) * real
            k = int(np.argmax(row))
            if row[k] > self.opts.pivot_eps:
                self.pivot(i, k)

    def primal(self):
        xs = np.zeros(self.ncols)
        xs[self.basis] = self.T[:self.m, -1]
        return xs


def solve_lp(lp: LinearProgram, options: SimplexOptions = DEFAULT_OPTIONS) -> LpSolution:
    """Solve ``lp`` by the two-phase simplex method.

    Pivoting uses Dantzig's rule for the first ``dantzig_pivots`` pivots
    and Bland's rule afterwards.  Raises :class:`IterationLimit` or
    :class:`NumericalBreakdown`; infeasibility and unboundedness are
    reported through ``status``.
    """
    opts = options
    std, rel = _standardize(lp)
    tab = _Tableau(std, rel, opts)
    m = tab.m

    if tab.artificial.any():
        tab.set_costs(tab.artificial.astype(float))
        tab.run(np.ones(tab.ncols, dtype=bool))
        infeas = -tab.T[m, -1]
        if infeas > opts.tol_feas * (1.0 + np.abs(std.b).max(initial=0.0)):
            return LpSolution(status=INFEASIBLE, iterations=tab.iterations)
        tab.drive_out_artificials()

    cost = np.zeros(tab.ncols)
    cost[:std.c.size] = std.c
    tab.set_costs(cost)
    status = tab.run(~tab.artificial)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED, iterations=tab.iterations)

    xs = tab.primal()[:tab.ns]
    x = std.x0 + std.T @ xs
    Binv = tab.T[:m, tab.init_cols]
    y = cost[tab.basis] @ Binv
    lam = -(y * std.row_sign)[:std.nrows_orig]
    return _finish(lp, x, lam, tab.iterations, opts)


def _finish(lp, x, lam, iterations, opts):
    # Clean multipliers whose sign is wrong only by roundoff.
    lam = lam.copy()
    for i, r in enumerate(lp.rel):
        if r == LE and lam[i] < 0 and lam[i] > -opts.tol_feas:
            lam[i] = 0.0
        elif r == GE and lam[i] > 0 and lam[i] < opts.tol_feas:
            lam[i] = 0.0
    obj = float(lp.c @ x)
    slack = lp.b - lp.A @ x
    active = tuple(int(i) for i in range(lp.nrows)
                   if lp.rel[i] == EQ or abs(slack[i]) <= opts.tol_feas * (1 + abs(lp.b[i])))
    rc = lp.c + lp.A.T @ lam
    res = residuals(lp, x, lam)
    return LpSolution(status=OPTIMAL, x=x, duals=lam, objective=obj,
                      active=active, iterations=iterations,
                      reduced_costs=rc, residuals=res)


def residuals(lp: LinearProgram, x, lam) -> dict:
    """Primal/dual feasibility, complementarity and duality-gap residuals."""
    slack = lp.b - lp.A @ x
    rel = np.array(lp.rel, dtype=object)
    le, ge, eq = rel == LE, rel == GE, rel == EQ
    pviol = np.concatenate([
        np.maximum(-slack[le], 0), np.maximum(slack[ge], 0), np.abs(slack[eq]),
        np.maximum(lp.lb - x, 0)[np.isfinite(lp.lb)],
        np.maximum(x - lp.ub, 0)[np.isfinite(lp.ub)],
    ])
    rc = lp.c + lp.A.T @ lam
    dviol = list(np.maximum(-lam[le], 0)) + list(np.maximum(lam[ge], 0))
    comp = list(np.abs(lam * slack)[~eq])
    dual_obj = -float(lp.b @ lam)
    for j in range(lp.nvars):
        lo, hi, r = lp.lb[j], lp.ub[j], rc[j]
        if r > 0:
            if np.isfinite(lo):
                dual_obj += r * lo
                comp.append(abs(r * (x[j] - lo)))
            else:
                dviol.append(r)
        elif r < 0:
            if np.isfinite(hi):
                dual_obj += r * hi
                comp.append(abs(r * (hi - x[j])))
            else:
                dviol.append(-r)
    primal_obj = float(lp.c @ x)
    return {
        "primal_infeasibility": float(max(pviol, default=0.0)),
        "dual_infeasibility": float(max(dviol, default=0.0)),
        "complementarity": float(max(comp, default=0.0)),
        "dual_objective": dual_obj,
        "gap": abs(primal_obj - dual_obj),
    }


# -- optimal-face ranges ------------------------------------------------------

def _face_tol(z, opts):
    return opts.face_tol * (1.0 + abs(z))


def _minmax(lp: LinearProgram, k: int, opts):
    lo_c = np.zeros(lp.nvars)
    lo_c[k] = 1.0
    lo = solve_lp(replace(lp, c=lo_c), opts)
    hi = solve_lp(replace(lp, c=-lo_c), opts)
    if not lo.optimal and lo.status != UNBOUNDED:
        raise SimplexError(f"face LP for range is {lo.status}")
    vmin = lo.x[k] if lo.optimal else -np.inf
    vmax = hi.x[k] if hi.optimal else np.inf
    return float(vmin), float(vmax)


def variable_range(lp: LinearProgram, solution: LpSolution, k: int,
                   options: SimplexOptions = DEFAULT_OPTIONS):
    """Min and max of variable ``k`` over the optimal face of ``lp``."""
    if not solution.optimal:
        raise ValueError("variable_range needs an optimal solution")
    z = solution.objective
    face = lp.add_rows(lp.c, [z + _face_tol(z, options)], [LE])
    return _minmax(face, k, options)


def dual_lp(lp: LinearProgram, z_opt: float | None = None,
            options: SimplexOptions = DEFAULT_OPTIONS) -> LinearProgram:
    """Feasible-multiplier polyhedron of ``lp`` as an LP in (lam, mu_lo, mu_up).

    Stationarity ``c + A.T lam - mu_lo + mu_up = 0`` with sign
    restrictions; if ``z_opt`` is given the dual objective is also held
    within tolerance of it, which cuts out the optimal dual face.
    """
    n, mrows = lp.nvars, lp.nrows
    lo_idx = np.flatnonzero(np.isfinite(lp.lb))
    up_idx = np.flatnonzero(np.isfinite(lp.ub))
    nd = mrows + lo_idx.size + up_idx.size
    Aeq = np.zeros((n, nd))
    Aeq[:, :mrows] = lp.A.T
    Aeq[lo_idx, mrows + np.arange(lo_idx.size)] = -1.0
    Aeq[up_idx, mrows + lo_idx.size + np.arange(up_idx.size)] = 1.0
    lb = np.full(nd, -np.inf)
    ub = np.full(nd, np.inf)
    for i, r in enumerate(lp.rel):
        if r == LE:
            lb[i] = 0.0
        elif r == GE:
            ub[i] = 0.0
    lb[mrows:] = 0.0
    dobj = np.concatenate([-lp.b, lp.lb[lo_idx], -lp.ub[up_idx]])
    A, b, rel = Aeq, -lp.c, [EQ] * n
    if z_opt is not None:
        A = np.vstack([A, dobj])
        b = np.concatenate([b, [z_opt - _face_tol(z_opt, options)]])
        rel = rel + [GE]
    return LinearProgram(np.zeros(nd), A, b, rel, lb, ub)


def dual_range(lp: LinearProgram, solution: LpSolution, row: int,
               options: SimplexOptions = DEFAULT_OPTIONS):
    """Min and max multiplier of ``row`` over all optimal multipliers."""
    if not solution.optimal:
        raise ValueError("dual_range needs an optimal solution")
    face = dual_lp(lp, solution.objective, options)
    return _minmax(face, row, options)
