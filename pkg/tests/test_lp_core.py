import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from bigmlab.lp_core import (EQ, GE, LE, IterationLimit, LinearProgram,
                             SimplexOptions, dual_range, solve_lp, variable_range)


def random_lp(rng, nmax=6, mmax=8):
    n = int(rng.integers(1, nmax + 1))
    m = int(rng.integers(1, mmax + 1))
    A = np.round(rng.uniform(-3, 3, (m, n)), int(rng.integers(0, 3)))
    b = np.round(rng.uniform(-3, 5, m), 1)
    c = np.round(rng.uniform(-2, 2, n), 1)
    rel = tuple(rng.choice([LE, EQ, GE], m, p=[0.6, 0.2, 0.2]))
    lb = np.where(rng.random(n) < 0.7, rng.uniform(-2, 0, n), -np.inf)
    ub = np.where(rng.random(n) < 0.5, rng.uniform(0, 3, n), np.inf)
    return LinearProgram(c, A, b, rel, lb, ub)


def highs(lp):
    le = [i for i, r in enumerate(lp.rel) if r == LE]
    ge = [i for i, r in enumerate(lp.rel) if r == GE]
    eq = [i for i, r in enumerate(lp.rel) if r == EQ]
    A_ub = np.vstack([lp.A[le], -lp.A[ge]])
    b_ub = np.concatenate([lp.b[le], -lp.b[ge]])
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(lp.lb, lp.ub)]
    res = linprog(lp.c, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  A_eq=lp.A[eq] if eq else None, b_eq=lp.b[eq] if eq else None,
                  bounds=bounds, method="highs")
    return {0: "optimal", 2: "infeasible", 3: "unbounded"}[res.status], res


def test_follower_at_x2():
    # min y s.t. -y <= 0, -0.01 y <= -1
    lp = LinearProgram.build([1.0], [[-1.0], [-0.01]], [0.0, -1.0])
    sol = solve_lp(lp)
    assert sol.optimal
    assert sol.x[0] == pytest.approx(100.0, abs=1e-9)
    assert np.allclose(sol.duals, [0.0, 100.0], atol=1e-9)
    assert sol.active == (1,)


def test_zero_objective():
    sol = solve_lp(LinearProgram.build([0.0], [[1.0]], [1.0]))
    assert sol.optimal and sol.x[0] <= 1 + 1e-12
    assert np.all(sol.duals == 0)


def test_unbounded_ray():
    assert solve_lp(LinearProgram.build([-1.0], [[-1.0]], [0.0])).status == "unbounded"


def test_infeasible():
    lp = LinearProgram.build([1.0], [[1.0], [-1.0]], [0.0, -1.0])
    assert solve_lp(lp).status == "infeasible"


def test_bounds_and_ge_rows():
    # min x1 + 2 x2 s.t. x1 + x2 >= 3, 0 <= x1 <= 2, x2 >= 0
    lp = LinearProgram([1, 2], [[1, 1]], [3], [GE], [0, 0], [2, np.inf])
    sol = solve_lp(lp)
    assert np.allclose(sol.x, [2, 1]) and sol.objective == pytest.approx(4)
    assert sol.duals[0] == pytest.approx(-2)  # >= row: nonpositive multiplier
    assert sol.reduced_costs[0] == pytest.approx(-1)  # at its upper bound


def test_iteration_limit():
    lp = LinearProgram.build([-1.0, -1.0], [[1, 2], [2, 1]], [4, 4])
    with pytest.raises(IterationLimit):
        solve_lp(lp, SimplexOptions(max_iter=1))


def test_bad_dimensions():
    with pytest.raises(ValueError):
        LinearProgram([1, 2], [[1, 2, 3]], [1], [LE], [0, 0], [1, 1])


def test_matches_highs_on_random_lps():
    rng = np.random.default_rng(1)
    seen = set()
    for _ in range(300):
        lp = random_lp(rng)
        sol = solve_lp(lp)
        status, ref = highs(lp)
        seen.add(status)
        assert sol.status == status
        if status == "optimal":
            assert sol.objective == pytest.approx(ref.fun, abs=1e-7 * (1 + abs(ref.fun)))
    assert seen == {"optimal", "infeasible", "unbounded"}


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_strong_duality_and_complementarity(seed):
    lp = random_lp(np.random.default_rng(seed))
    sol = solve_lp(lp)
    if sol.optimal:
        r = sol.residuals
        assert r["gap"] <= 1e-6 * (1 + abs(sol.objective))
        assert r["complementarity"] <= 1e-6
        assert r["primal_infeasibility"] <= 1e-7
        assert r["dual_infeasibility"] <= 1e-7


def test_determinism():
    rng = np.random.default_rng(7)
    for _ in range(20):
        lp = random_lp(rng)
        a, b = solve_lp(lp), solve_lp(lp)
        assert a.status == b.status
        if a.optimal:
            assert a.x.tobytes() == b.x.tobytes() and a.duals.tobytes() == b.duals.tobytes()


def test_scaling_covariance_nondegenerate():
    # min -x1 - x2 s.t. x1 + 2x2 <= 4, 3x1 + x2 <= 6, x >= 0: unique vertex and duals
    A = np.array([[1.0, 2.0], [3.0, 1.0]])
    lp = LinearProgram([-1, -1], A, [4, 6], [LE, LE], [0, 0], [np.inf, np.inf])
    base = solve_lp(lp)
    for alpha in (0.01, 3.0, 250.0):
        A2 = A.copy()
        A2[1] *= alpha
        s = solve_lp(LinearProgram([-1, -1], A2, [4, 6 * alpha], [LE, LE], [0, 0],
                                   [np.inf, np.inf]))
        assert np.allclose(s.x, base.x, atol=1e-9)
        assert s.duals[1] == pytest.approx(base.duals[1] / alpha, rel=1e-9)
        assert s.duals[0] == pytest.approx(base.duals[0], rel=1e-9)


def test_dual_range_duplicated_row():
    # x >= 1 written twice: the multiplier can be split arbitrarily
    lp = LinearProgram.build([1.0], [[-1.0], [-1.0]], [-1.0, -1.0])
    sol = solve_lp(lp)
    lo, hi = dual_range(lp, sol, 0)
    assert lo == pytest.approx(0, abs=1e-8) and hi == pytest.approx(1, abs=1e-8)


def test_dual_range_unique():
    lp = LinearProgram.build([1.0], [[-1.0], [-0.01]], [0.0, -1.0])
    sol = solve_lp(lp)
    lo, hi = dual_range(lp, sol, 1)
    assert hi - lo <= 1e-6 and hi == pytest.approx(100)


def test_variable_range_on_flat_objective():
    # min 0 over 0 <= x <= 2
    lp = LinearProgram([0.0], np.zeros((0, 1)), [], [], [0.0], [2.0])
    sol = solve_lp(lp)
    assert variable_range(lp, sol, 0) == pytest.approx((0.0, 2.0))
