import numpy as np
import pytest

from bigmlab.genlab import GenConfig, generate_random
from bigmlab.lp_core import LinearProgram, solve_lp
from bigmlab.milp import enumerate_patterns, solve_milp_bnb
from bigmlab.model import LbpInstance
from bigmlab.reform import BigMConfig, bigm_reformulate, kkt_reformulate, milp_violation


def by_u(table):
    return {row.u: row for row in table}


def test_bnb_with_valid_bounds(milp_200):
    sol = solve_milp_bnb(milp_200)
    assert sol.optimal and sol.z == pytest.approx(102)
    assert list(sol.u) == [0, 1]
    assert sol.x[0] == pytest.approx(2) and sol.y[0] == pytest.approx(100)
    assert milp_violation(milp_200, np.concatenate([sol.x, sol.y, sol.lam]), sol.u) <= 1e-7


def test_bnb_with_small_dual_bound(milp_50):
    sol = solve_milp_bnb(milp_50)
    assert sol.z == pytest.approx(1)
    assert sol.x[0] == pytest.approx(1) and sol.y[0] == pytest.approx(0, abs=1e-9)


def test_enumeration_table_two(milp_200):
    res = enumerate_patterns(milp_200)
    t = by_u(res.table)
    assert t[(0, 0)].status == "infeasible"
    assert t[(0, 1)].z == pytest.approx(102) and not t[(0, 1)].multiple
    assert t[(1, 0)].z == pytest.approx(1) and not t[(1, 0)].multiple
    assert np.allclose(t[(1, 0)].lam, [1, 0])
    assert t[(1, 1)].z == pytest.approx(1) and t[(1, 1)].multiple
    assert res.z == pytest.approx(102) and res.ties == ((0, 1),)


def test_enumeration_table_one(milp_50):
    res = enumerate_patterns(milp_50)
    t = by_u(res.table)
    assert t[(0, 0)].status == t[(0, 1)].status == "infeasible"
    assert t[(1, 0)].z == pytest.approx(1) and t[(1, 1)].z == pytest.approx(1)
    # lam1 = 1 - 0.01 lam2 with 0 <= lam2 <= 50
    lo, hi = t[(1, 1)].lam_ranges[0]
    assert lo == pytest.approx(0.5, abs=1e-7) and hi == pytest.approx(1.0, abs=1e-7)
    assert set(res.ties) == {(1, 0), (1, 1)}
    assert res.u.tolist() == [1, 0]


def test_no_binaries_reduces_to_lp():
    # follower has no rows and zero cost; leader: min x over 0 <= x <= 1
    inst = LbpInstance(n=1, m=1, a=[1], b=[0], C=[[1], [-1]], d=[[0], [0]], e=[1, 0],
                       p=[0], q=[0], R=np.zeros((0, 1)), S=np.zeros((0, 1)), t=[])
    milp = bigm_reformulate(kkt_reformulate(inst), BigMConfig([], []))
    sol = solve_milp_bnb(milp)
    ref = solve_lp(LinearProgram.build([1.0], [[1.0], [-1.0]], [1.0, 0.0]))
    assert sol.optimal and sol.nodes == 1
    assert sol.z == pytest.approx(ref.objective)


def test_single_binary_hand_enumeration():
    # leader min x + y, 0 <= x <= 1; follower min y s.t. y >= x.
    # u=0 needs lam=0 but stationarity gives lam=1; u=1 gives y=x and z=0 at x=0.
    inst = LbpInstance(n=1, m=1, a=[1], b=[1], C=[[1], [-1]], d=[[0], [0]], e=[1, 0],
                       p=[0], q=[1], R=[[1]], S=[[-1]], t=[0])
    res = enumerate_patterns(bigm_reformulate(kkt_reformulate(inst), BigMConfig([10], [10])))
    assert [r.status for r in res.table] == ["infeasible", "optimal"]
    assert res.table[1].z == pytest.approx(0) and res.table[1].lam[0] == pytest.approx(1)


def test_enumeration_cap(milp_200):
    with pytest.raises(ValueError):
        enumerate_patterns(milp_200, cap=1)


@pytest.mark.parametrize("seed", range(25))
def test_bnb_agrees_with_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    J = int(rng.integers(2, 6))
    inst = generate_random(GenConfig(seed=seed, n=2, m=2, K=1, J=J, sigma=float(seed % 3)))
    cfg = BigMConfig(rng.uniform(0.5, 100, J), rng.uniform(0.5, 100, J))
    milp = bigm_reformulate(kkt_reformulate(inst), cfg)
    bnb = solve_milp_bnb(milp)
    enum = enumerate_patterns(milp)
    assert bnb.status == enum.status
    assert bnb.nodes <= 2 ** (J + 1) - 1
    if bnb.optimal:
        assert bnb.z == pytest.approx(enum.z, abs=1e-6 * (1 + abs(enum.z)))
        inc = np.array(bnb.incumbents)
        assert np.all(np.diff(inc) <= 0)
        assert bnb.z_internal - bnb.best_bound <= 1e-6 * (1 + abs(bnb.z))
        assert set(np.unique(bnb.u)) <= {0, 1}
