"""Random bilevel instances and the trial-and-error failure benchmark."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .lp_core import DEFAULT_OPTIONS, OPTIMAL, SimplexOptions
from .milp import solve_milp_bnb
from .model import LbpInstance, make_solution, save, validate
from .oracle import certify_candidate, solve_global_oracle
from .reform import BigMConfig, bigm_reformulate, kkt_reformulate
from .tuner import estimate_bigm_local, tune_trial_and_error


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    """Generator settings.

    ``K`` counts random leader rows (a box ``|x_i| <= x_box`` is always
    added).  ``J`` counts all follower rows, the first ``m`` of which are
    ``y >= 0``; with a positive follower cost this keeps every follower LP
    bounded.  Follower row j is rescaled by ``10**(+-sigma*v_j)`` with
    ``v_j ~ U[0, 1]`` and the sign alternating over rows.  That leaves the
    feasible set alone but spreads the multipliers over orders of magnitude.  ``mode="anchor"`` lifts right
    hand sides to cover a sampled anchor point; ``mode="origin"`` draws
    right hand sides in ``[J, 2J]`` so the origin is feasible.
    """

    seed: int = 0
    n: int = 2
    m: int = 2
    K: int = 2
    J: int = 4
    coef: float = 1.0
    sigma: float = 0.0
    mode: str = "anchor"
    x_box: float = 10.0

    def __post_init__(self):
        if min(self.n, self.m) < 1 or self.K < 0:
            raise ValueError("need n, m >= 1 and K >= 0")
        if self.J < self.m:
            raise ValueError("J must be at least m (the y >= 0 rows)")
        if self.sigma < 0 or self.coef <= 0 or self.x_box <= 0:
            raise ValueError("sigma >= 0, coef > 0 and x_box > 0 required")
        if self.mode not in ("anchor", "origin"):
            raise ValueError(f"unknown feasibility mode {self.mode!r}")


def generate_random(cfg: GenConfig) -> LbpInstance:
    rng = np.random.default_rng(cfg.seed)
    n, m, K, J, c = cfg.n, cfg.m, cfg.K, cfg.J, cfg.coef
    a = rng.uniform(-1, 1, n)
    b = rng.uniform(-1, 1, m)
    p = rng.uniform(-1, 1, n)
    q = rng.uniform(0.1, 1.0, m)

    C = np.vstack([rng.uniform(-c, c, (K, n)), np.eye(n), -np.eye(n)])
    R = np.vstack([np.zeros((m, n)), rng.uniform(-c, c, (J - m, n))])
    S = np.vstack([-np.eye(m), rng.uniform(-c, c, (J - m, m))])

    if cfg.mode == "origin":
        e_rand = rng.uniform(J, 2 * J, K)
        t_rand = rng.uniform(J, 2 * J, J - m)
    else:
        x0 = rng.uniform(-0.5 * cfg.x_box, 0.5 * cfg.x_box, n)
        y0 = rng.uniform(0.0, 1.0, m)
        e_rand = np.maximum(rng.uniform(-1, 1, K), C[:K] @ x0)
        t_rand = np.maximum(rng.uniform(-1, 1, J - m), R[m:] @ x0 + S[m:] @ y0)
    e = np.concatenate([e_rand, np.full(2 * n, cfg.x_box)])
    t = np.concatenate([np.zeros(m), t_rand])

    signs = np.where(np.arange(J) % 2 == 0, 1.0, -1.0)
    scale = 10.0 ** (cfg.sigma * rng.uniform(0, 1, J) * signs)
    R, S, t = R * scale[:, None], S * scale[:, None], t * scale

    inst = LbpInstance(n=n, m=m, a=a, b=b, C=C, d=np.zeros((K + 2 * n, m)), e=e,
                       p=p, q=q, R=R, S=S, t=t, name=f"rand_s{cfg.seed}")
    rep = validate(inst)
    if not rep.usable:
        raise GenerationError("; ".join(rep.errors))
    return inst


def instance_seed(master: int, index: int) -> int:
    """Per-instance seed derived from the master seed and the index only."""
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def generate_batch(cfg: GenConfig, count: int):
    return [generate_random(GenConfig(**{**asdict(cfg),
                                         "seed": instance_seed(cfg.seed, i)}))
            for i in range(count)]


def write_batch(instances, directory) -> list:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(instances))))
    paths = []
    for i, inst in enumerate(instances):
        path = out / f"instance_{i:0{width}d}.json"
        save(inst, path)
        paths.append(path)
    return paths


# -- benchmark -------------------------------------------------------------------

FAIL_VERDICTS = ("suboptimal", "infeasible")


@dataclass
class BenchRecord:
    index: int
    name: str
    oracle_status: str = ""
    oracle_z: float = math.nan
    tuner_status: str = ""
    tuner_z: float = math.nan
    certificate: str = ""
    gap: float = math.nan
    iterations: int = 0
    estimator_z: float = math.nan
    estimator_certificate: str = ""
    error: str = ""

    @property
    def failed(self) -> bool:
        return self.certificate in FAIL_VERDICTS


@dataclass
class BenchResult:
    records: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.records)

    @property
    def failure_rate(self) -> float:
        if not self.records:
            return math.nan
        return sum(r.failed for r in self.records) / len(self.records)

    @property
    def estimator_failure_rate(self) -> float:
        if not self.records:
            return math.nan
        return (sum(r.estimator_certificate in FAIL_VERDICTS for r in self.records)
                / len(self.records))

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(BenchRecord.__dataclass_fields__)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in self.records:
            w.writerow([_fmt(getattr(r, k)) for k in names])
        return buf.getvalue()

    def summary(self) -> str:
        errors = sum(bool(r.error) for r in self.records)
        lines = [
            f"instances           {self.count}",
            f"tuner failures      {sum(r.failed for r in self.records)}",
            f"tuner failure rate  {_fmt(self.failure_rate)}",
            f"estimator failures  "
            f"{sum(r.estimator_certificate in FAIL_VERDICTS for r in self.records)}",
            f"estimator fail rate {_fmt(self.estimator_failure_rate)}",
            f"errors              {errors}",
        ]
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.15g}"
    return str(v)


def _policy_cfg(policy, inst):
    if callable(policy):
        return policy(inst)
    mp, md = policy
    return BigMConfig.uniform(inst.J, mp, md)


def bench_instance(index, inst, policy, growth, kappa, max_iter=50,
                   options: SimplexOptions = DEFAULT_OPTIONS) -> BenchRecord:
    """Oracle, trial-and-error with certificate, and estimator for one instance."""
    rec = BenchRecord(index=index, name=inst.name)
    try:
        orc = solve_global_oracle(inst, options)
        rec.oracle_status, rec.oracle_z = orc.status, orc.z
        rep = tune_trial_and_error(inst, _policy_cfg(policy, inst), growth, max_iter,
                                   options=options)
        rec.tuner_status = rep.status
        rec.iterations = len(rep.iterations)
        if rep.solution is not None:
            rec.tuner_z = rep.solution.z_upper
            cert = certify_candidate(inst, rep.solution, oracle=orc, options=options)
            rec.certificate, rec.gap = cert.verdict, cert.gap
        est = estimate_bigm_local(inst, kappa, options)
        sol = solve_milp_bnb(bigm_reformulate(kkt_reformulate(inst), est.cfg), options)
        if sol.status == OPTIMAL:
            rec.estimator_z = sol.z
            cand = make_solution(inst, sol.x, sol.y, sol.lam, "accepted_unverified")
            rec.estimator_certificate = certify_candidate(
                inst, cand, oracle=orc, options=options).verdict
        else:
            rec.estimator_certificate = sol.status
    except Exception as exc:  # recorded per instance, batch continues
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _bench_job(args):
    return bench_instance(*args)


def run_benchmark(gen: GenConfig | None, count: int, policy=(100.0, 100.0),
                  growth: float = 10.0, kappa: float = 10.0, instances=None,
                  workers: int = 1, options: SimplexOptions = DEFAULT_OPTIONS) -> BenchResult:
    """Benchmark ``count`` generated instances (or the given ``instances``).

    ``policy`` is either ``(mp0, md0)`` scalars broadcast to every row or a
    callable returning a :class:`BigMConfig` for an instance.
    """
    if instances is None:
        instances = generate_batch(gen, count) if count > 0 else []
    jobs = [(i, inst, policy, growth, kappa, 50, options)
            for i, inst in enumerate(instances)]
    if workers > 1 and len(jobs) > 1 and not callable(policy):
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_bench_job, jobs))
    else:
        records = [_bench_job(j) for j in jobs]
    return BenchResult(records)


def oracle_bigm(orc, factor: float = 10.0) -> BigMConfig:
    """Big-Ms from the oracle's observed maxima times ``factor`` (floored at 1)."""
    return BigMConfig(factor * np.maximum(orc.max_slack, 1.0),
                      factor * np.maximum(orc.max_abs_lam, 1.0))
