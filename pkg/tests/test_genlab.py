import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bigmlab.genlab import (GenConfig, generate_batch, generate_random, instance_seed,
                            oracle_bigm, run_benchmark, write_batch)
from bigmlab.model import builtin_counterexample, digest, load, validate
from bigmlab.milp import solve_milp_bnb
from bigmlab.oracle import solve_global_oracle
from bigmlab.reform import bigm_reformulate, kkt_reformulate


def test_same_seed_same_instance():
    cfg = GenConfig(seed=1, n=2, m=2, K=2, J=4)
    assert digest(generate_random(cfg)) == digest(generate_random(cfg))
    assert digest(generate_random(GenConfig(seed=2))) != digest(generate_random(cfg))


def test_seed_one_is_solvable():
    inst = generate_random(GenConfig(seed=1, n=2, m=2, K=2, J=4))
    assert validate(inst).usable
    assert solve_global_oracle(inst).status == "optimal"


def test_batch_members_depend_on_index_only(tmp_path):
    cfg = GenConfig(seed=5, J=3)
    short, long = generate_batch(cfg, 3), generate_batch(cfg, 6)
    assert [digest(i) for i in short] == [digest(i) for i in long[:3]]
    assert instance_seed(5, 0) != instance_seed(5, 1)
    paths = write_batch(short, tmp_path)
    assert [p.name for p in paths] == ["instance_0000.json", "instance_0001.json",
                                       "instance_0002.json"]
    assert digest(load(paths[1])) == digest(short[1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3), st.integers(0, 3),
       st.integers(0, 3), st.sampled_from(["anchor", "origin"]), st.sampled_from([0.0, 1.5]))
def test_generated_instances_are_feasible(seed, n, m, K, extra, mode, sigma):
    inst = generate_random(GenConfig(seed=seed, n=n, m=m, K=K, J=m + extra, mode=mode,
                                     sigma=sigma))
    assert validate(inst).usable
    assert inst.J == m + extra and inst.K == K + 2 * n
    if mode == "origin":
        assert np.all(inst.t >= 0) and np.all(inst.e >= 0)
    assert solve_global_oracle(inst).status == "optimal"


def test_sigma_spreads_multipliers():
    spreads = []
    for seed in range(50):
        orc = solve_global_oracle(generate_random(GenConfig(seed=seed, J=4, sigma=3.0)))
        lam = np.abs(orc.solution.lam)
        pos = lam[lam > 1e-9]
        if pos.size >= 2:
            spreads.append(pos.max() / pos.min())
    assert np.median(spreads) >= 100


def test_bad_config():
    with pytest.raises(ValueError):
        GenConfig(m=3, J=2)
    with pytest.raises(ValueError):
        GenConfig(mode="nowhere")


def test_empty_benchmark():
    res = run_benchmark(GenConfig(), 0)
    assert res.count == 0 and math.isnan(res.failure_rate)


def test_counterexample_policy_always_fails():
    ce = builtin_counterexample()
    res = run_benchmark(None, 0, policy=(200.0, 50.0), instances=[ce] * 3)
    assert res.failure_rate == 1.0
    assert all(r.certificate == "suboptimal" for r in res.records)
    rows = res.to_csv().splitlines()
    assert rows[0].startswith("index,name,oracle_status") and len(rows) == 4


def test_random_benchmark_runs_and_counts():
    res = run_benchmark(GenConfig(seed=3, J=4, sigma=2.0), 12, policy=(100.0, 100.0))
    assert res.count == 12 and not any(r.error for r in res.records)
    assert 0.0 <= res.failure_rate <= 1.0
    for r in res.records:
        if r.certificate == "global":
            assert r.tuner_z == pytest.approx(r.oracle_z, abs=1e-6 * (1 + abs(r.oracle_z)))
    assert "tuner failure rate" in res.summary()


def test_parallel_matches_serial():
    gen = GenConfig(seed=9, J=3)
    a = run_benchmark(gen, 4)
    b = run_benchmark(gen, 4, workers=2)
    assert a.to_csv() == b.to_csv()


@pytest.mark.parametrize("seed", range(8))
def test_oracle_derived_bounds_recover_optimum(seed):
    inst = generate_random(GenConfig(seed=seed, J=4, sigma=1.0))
    orc = solve_global_oracle(inst)
    sol = solve_milp_bnb(bigm_reformulate(kkt_reformulate(inst), oracle_bigm(orc)))
    assert sol.z == pytest.approx(orc.z, abs=1e-6 * (1 + abs(orc.z)))
