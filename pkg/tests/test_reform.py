import itertools

import numpy as np
import pytest

from bigmlab.genlab import GenConfig, generate_random
from bigmlab.lp_core import solve_lp
from bigmlab.milp import solve_pattern_row
from bigmlab.model import InstanceError, LbpInstance
from bigmlab.oracle import follower_lp, solve_global_oracle
from bigmlab.reform import (BigMConfig, bigm_reformulate, induced_pattern,
                            kkt_reformulate, milp_violation, pattern_lp,
                            solve_lp_fixed_pattern)


def test_stationarity_row(ce_kkt):
    st = ce_kkt.block("stationarity")
    # 1 - lam1 - 0.01 lam2 = 0  <=>  -lam1 - 0.01 lam2 = -1
    assert st.size == 1 and st.rel == "="
    assert np.array_equal(st.A[0], [0, 0, -1, -0.01]) and st.rhs[0] == -1
    assert len(ce_kkt.pairs) == 2


def test_single_row_stationarity_forces_multiplier():
    inst = LbpInstance(n=1, m=1, a=[1], b=[1], C=[[1], [-1]], d=[[0], [0]], e=[2, 0],
                       p=[0], q=[1], R=[[0]], S=[[-1]], t=[0])
    kkt = kkt_reformulate(inst)
    assert np.array_equal(kkt.block("stationarity").A[0], [0, 0, -1])
    sol = solve_lp_fixed_pattern(kkt, [1])
    assert sol.optimal and sol.x[2] == pytest.approx(1.0)


def test_rejects_coupled_instance():
    inst = LbpInstance(n=1, m=1, a=[1], b=[1], C=[[1]], d=[[1]], e=[1], p=[0], q=[1],
                       R=[[0]], S=[[-1]], t=[0])
    with pytest.raises(InstanceError):
        kkt_reformulate(inst)


def test_stationarity_at_oracle_matches_follower_duals():
    inst = generate_random(GenConfig(seed=3, n=2, m=2, K=1, J=2))
    kkt = kkt_reformulate(inst)
    orc = solve_global_oracle(inst)
    x, y, lam = orc.solution.x, orc.solution.y, orc.solution.lam
    resid = inst.q + inst.S.T @ lam
    assert np.abs(resid).max() <= 1e-7
    fl = solve_lp(follower_lp(inst, x))
    assert fl.objective == pytest.approx(inst.q @ y, abs=1e-7)
    assert np.abs(inst.q + inst.S.T @ fl.duals).max() <= 1e-7
    assert kkt.block("stationarity").size == inst.m


def test_milp_is_problem_five(milp_200):
    m = milp_200
    assert m.nrows == 2 + 2 + 1 + 2 + 2 + 2
    # variables: x, y, lam1, lam2, u1, u2
    assert np.array_equal(m.block("dual_bigm").A, [[0, 0, 1, 0, -200, 0], [0, 0, 0, 1, 0, -200]])
    # y <= (1-u1) 200   and   -x + 0.01 y + 1 <= (1-u2) 200
    pb = m.block("primal_bigm")
    assert np.array_equal(pb.A, [[0, 1, 0, 0, 200, 0], [-1, 0.01, 0, 0, 0, 200]])
    assert np.array_equal(pb.rhs, [200, 199])
    assert np.array_equal(m.objective, [-1, -1, 0, 0, 0, 0])


def test_row_counts_general():
    inst = generate_random(GenConfig(seed=1, n=3, m=2, K=2, J=5))
    m = bigm_reformulate(kkt_reformulate(inst), BigMConfig.uniform(5, 10, 10))
    K, J = inst.K, inst.J
    assert m.nrows == K + J + inst.m + J + J + J


def test_optimal_point_feasible_iff_bounds_cover(ce_kkt):
    z = np.array([2.0, 100.0, 0.0, 100.0])
    u = induced_pattern(z[2:])
    assert list(u) == [0, 1]
    ok = bigm_reformulate(ce_kkt, BigMConfig.uniform(2, 200, 200))
    bad = bigm_reformulate(ce_kkt, BigMConfig.uniform(2, 200, 50))
    assert milp_violation(ok, z, u) <= 1e-12
    assert milp_violation(bad, z, u) == pytest.approx(50.0)


def test_induced_pattern_tie_goes_to_zero():
    assert list(induced_pattern([0.0, 0.0, 3.0])) == [0, 0, 1]


def test_bigm_config_validation():
    with pytest.raises(ValueError):
        BigMConfig([1, 0], [1, 1])
    with pytest.raises(ValueError):
        BigMConfig([1, np.inf], [1, 1])
    with pytest.raises(ValueError):
        bigm_reformulate(kkt_reformulate(generate_random(GenConfig(J=4))),
                         BigMConfig.uniform(3, 1, 1))


@pytest.mark.parametrize("seed", range(12))
def test_pattern_lp_with_boxes_equals_restricted_milp(seed):
    rng = np.random.default_rng(seed)
    inst = generate_random(GenConfig(seed=seed, n=2, m=2, K=1, J=4, sigma=float(seed % 3)))
    kkt = kkt_reformulate(inst)
    cfg = BigMConfig(rng.uniform(1, 50, 4), rng.uniform(1, 50, 4))
    milp = bigm_reformulate(kkt, cfg)
    for u in itertools.product((0, 1), repeat=4):
        a = solve_lp_fixed_pattern(kkt, u, cfg.MP, cfg.MD)
        b = solve_pattern_row(milp, u, 0)
        assert a.status == b.status
        if a.optimal:
            assert inst.upper_sign * a.objective == pytest.approx(b.z, abs=1e-6)


def test_pattern_lp_without_boxes_has_no_big_m(ce_kkt):
    lp = pattern_lp(ce_kkt, [0, 1])
    assert np.all(np.abs(lp.A) <= 1.0)
    assert lp.ub[3] == np.inf and lp.ub[2] == 0.0
