"""Command-line interface.

Exit codes: 0 optimal/global/accepted, 2 infeasible, 3 unbounded,
4 certified suboptimal, 1 tuning hit its iteration limit,
64 usage error, 65 unreadable or invalid instance file.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .genlab import GenConfig, generate_batch, generate_random, run_benchmark, write_batch
from .lp_core import INFEASIBLE, OPTIMAL, UNBOUNDED, SimplexOptions
from .lpfile import milp_to_lp
from .milp import enumerate_patterns, solve_milp_bnb
from .model import (InstanceError, builtin_counterexample, dumps, load,
                    make_solution, validate)
from .oracle import certify_candidate, solve_global_oracle, verify_bilevel_feasible
from .reform import BigMConfig, bigm_reformulate, kkt_reformulate
from .report import (dump_report, num, pattern_table_csv, pattern_table_text,
                     run_report, solution_text, tune_trace_csv)
from .tuner import ACCEPTED, MILP_INFEASIBLE, MILP_UNBOUNDED, tune_trial_and_error

EX_OK, EX_FAIL, EX_INFEASIBLE, EX_UNBOUNDED, EX_SUBOPT = 0, 1, 2, 3, 4
EX_USAGE, EX_DATAERR = 64, 65

STATUS_EXIT = {OPTIMAL: EX_OK, INFEASIBLE: EX_INFEASIBLE, UNBOUNDED: EX_UNBOUNDED}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text, J, label):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"{label}: expected a number or comma-separated numbers")
    if len(vals) == 1:
        vals = vals * J
    if len(vals) != J:
        raise UsageError(f"{label}: got {len(vals)} values, instance has J={J}")
    return np.array(vals)


def _cfg(args, J, mp_key="mp", md_key="md"):
    MP = _vector(getattr(args, mp_key), J, "--" + mp_key.replace("_", "-"))
    MD = _vector(getattr(args, md_key), J, "--" + md_key.replace("_", "-"))
    try:
        return BigMConfig(MP, MD)
    except ValueError as exc:
        raise UsageError(str(exc))


def _load(args):
    try:
        inst = load(args.instance, allow_coupled=getattr(args, "allow_coupled", False))
    except OSError as exc:
        raise InstanceError(f"cannot read {args.instance}: {exc}")
    rep = validate(inst)
    if not rep.usable:
        raise InstanceError("; ".join(rep.errors))
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return inst


def _emit(args, report, text):
    if args.format == "json":
        sys.stdout.write(dump_report(report))
    else:
        sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(dump_report(report), encoding="utf-8")


def _cert_text(cert):
    s = f"certificate: {cert.verdict}"
    if cert.verdict == "suboptimal":
        s += f" (gap {num(cert.gap)}, oracle z {num(cert.oracle_z)})"
    elif cert.verdict == "infeasible" and cert.verify is not None:
        s += f" ({cert.verify.reason})"
    return s + "\n"


def cmd_solve(args, opts):
    inst = _load(args)
    t0 = time.perf_counter()
    J = inst.J
    if args.method == "oracle":
        res = solve_global_oracle(inst, opts)
        payload = {"status": res.status, "oracle": res.to_dict()}
        sol = res.solution
        text = f"status: {res.status}\n"
        if res.status == OPTIMAL:
            text += solution_text("oracle optimum", sol.x, sol.y, sol.lam, sol.z_upper)
            if len(res.ties) > 1:
                text += "tying patterns: " + "; ".join(
                    ",".join(map(str, u)) for u in res.ties) + "\n"
        _emit(args, run_report(inst, "oracle", payload, time.perf_counter() - t0), text)
        return STATUS_EXIT[res.status]

    cfg = _cfg(args, J)
    milp = bigm_reformulate(kkt_reformulate(inst), cfg)
    if args.method == "enumerate":
        res = enumerate_patterns(milp, opts)
    else:
        res = solve_milp_bnb(milp, opts)
    payload = {"status": res.status, "bigm": cfg.to_dict(), "milp": res.to_dict()}
    if args.format == "csv" and args.method == "enumerate":
        text = pattern_table_csv(res.table, inst.n, inst.m, J)
    else:
        text = f"status: {res.status}\n"
        if args.method == "enumerate":
            text = pattern_table_text(res.table, inst.n, inst.m, J) + text
        if res.optimal:
            text += solution_text("MILP optimum (u = " + ",".join(map(str, res.u)) + ")",
                                  res.x, res.y, res.lam, res.z)
    code = STATUS_EXIT[res.status]
    if args.certify and res.optimal:
        cand = make_solution(inst, res.x, res.y, res.lam, "accepted_unverified")
        cert = certify_candidate(inst, cand, options=opts)
        payload["certificate"] = cert.to_dict()
        if args.format != "csv":
            text += _cert_text(cert)
        if cert.verdict != "global":
            code = EX_SUBOPT
    _emit(args, run_report(inst, args.method, payload, time.perf_counter() - t0), text)
    return code


def cmd_tune(args, opts):
    if args.max_iter < 1:
        raise UsageError("--max-iter must be at least 1")
    if args.growth <= 1:
        raise UsageError("--growth must exceed 1")
    inst = _load(args)
    cfg0 = _cfg(args, inst.J, "mp0", "md0")
    t0 = time.perf_counter()
    rep = tune_trial_and_error(inst, cfg0, args.growth, args.max_iter, args.certify,
                               args.grow_on_infeasible, opts)
    if args.trace_csv:
        Path(args.trace_csv).write_text(tune_trace_csv(rep), encoding="utf-8")
    text = tune_trace_csv(rep) + f"status: {rep.status}\n"
    if rep.solution is not None:
        s = rep.solution
        text += solution_text("accepted (unverified)", s.x, s.y, s.lam, s.z_upper)
    if rep.certificate is not None:
        text += _cert_text(rep.certificate)
    _emit(args, run_report(inst, "tune", rep.to_dict(), time.perf_counter() - t0), text)
    if rep.status == ACCEPTED:
        return EX_SUBOPT if rep.contradicted else EX_OK
    return {MILP_INFEASIBLE: EX_INFEASIBLE, MILP_UNBOUNDED: EX_UNBOUNDED}.get(
        rep.status, EX_FAIL)


def cmd_verify(args, opts):
    inst = _load(args)
    x = _vector(args.x, inst.n, "--x") if inst.n else np.zeros(0)
    y = _vector(args.y, inst.m, "--y") if inst.m else np.zeros(0)
    rep = verify_bilevel_feasible(inst, x, y, args.tol, opts)
    text = (f"feasible: {'yes' if rep.feasible else 'no'}\n"
            f"lower_gap: {num(rep.lower_gap)}\n"
            f"upper_violation: {num(rep.upper_violation)}\n"
            f"lower_violation: {num(rep.lower_violation)}\n"
            f"z_upper: {num(rep.z_upper)}\n")
    if rep.reason:
        text += f"reason: {rep.reason}\n"
    _emit(args, run_report(inst, "verify", {"verify": rep.to_dict()}, 0.0), text)
    return EX_OK if rep.feasible else EX_INFEASIBLE


def cmd_export_lp(args, opts):
    inst = _load(args)
    milp = bigm_reformulate(kkt_reformulate(inst), _cfg(args, inst.J))
    text = milp_to_lp(milp)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EX_OK


def _gen_cfg(args):
    try:
        return GenConfig(seed=args.seed, n=args.n, m=args.m, K=args.k, J=args.j,
                         coef=args.coef, sigma=args.sigma, mode=args.mode)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_generate(args, opts):
    cfg = _gen_cfg(args)
    if args.count == 1:
        text = dumps(generate_random(cfg))
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EX_OK
    if not args.out:
        raise UsageError("--out DIR is required when --count > 1")
    for p in write_batch(generate_batch(cfg, args.count), args.out):
        print(p)
    return EX_OK


def cmd_bench(args, opts):
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    cfg = _gen_cfg(args)
    instances = None
    if args.family:
        instances = [builtin_counterexample(float(e)) for e in args.family.split(",")]
    res = run_benchmark(cfg, args.count, (args.mp0, args.md0), args.growth, args.kappa,
                        instances=instances, workers=args.workers, options=opts)
    if args.csv:
        Path(args.csv).write_text(res.to_csv(), encoding="utf-8")
    if args.instances_dir and instances is None:
        write_batch(generate_batch(cfg, args.count), args.instances_dir)
    head = (f"family eps: {args.family}\n" if instances is not None
            else f"generator: {asdict(cfg)}\n")
    sys.stdout.write(head + res.summary())
    return EX_OK


def cmd_example(args, opts):
    text = dumps(builtin_counterexample(args.eps))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EX_OK


def build_parser():
    p = _Parser(prog="bigmlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bigmlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_instance(sp, report=True):
        sp.add_argument("instance", help="instance JSON file")
        sp.add_argument("--allow-coupled", action="store_true",
                        help="accept upper rows that involve y")
        if report:
            sp.add_argument("--format", choices=("text", "json", "csv"), default="text")
            sp.add_argument("--out", help="write the JSON run report here")

    s = sub.add_parser("solve", help="solve with the oracle, big-M B&B or enumeration")
    with_instance(s)
    s.add_argument("--method", choices=("bigm", "oracle", "enumerate"), default="oracle")
    s.add_argument("--mp", default="1000", help="MP_j (scalar or comma list)")
    s.add_argument("--md", default="1000", help="MD_j (scalar or comma list)")
    s.add_argument("--certify", action="store_true")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("tune", help="trial-and-error big-M tuning")
    with_instance(s)
    s.add_argument("--mp0", default="1000")
    s.add_argument("--md0", default="1000")
    s.add_argument("--growth", type=float, default=10.0)
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--certify", action="store_true")
    s.add_argument("--grow-on-infeasible", action="store_true")
    s.add_argument("--trace-csv")
    s.set_defaults(func=cmd_tune)

    s = sub.add_parser("verify", help="check bilevel feasibility of a point")
    with_instance(s)
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("export-lp", help="write the big-M MILP in LP format")
    with_instance(s, report=False)
    s.add_argument("--mp", default="1000")
    s.add_argument("--md", default="1000")
    s.add_argument("--out")
    s.set_defaults(func=cmd_export_lp)

    def gen_args(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--n", type=int, default=2)
        sp.add_argument("--m", type=int, default=2)
        sp.add_argument("--k", type=int, default=2)
        sp.add_argument("--j", type=int, default=4)
        sp.add_argument("--coef", type=float, default=1.0)
        sp.add_argument("--sigma", type=float, default=0.0)
        sp.add_argument("--mode", choices=("anchor", "origin"), default="anchor")

    s = sub.add_parser("generate", help="random instance(s)")
    gen_args(s)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("bench", help="trial-and-error failure benchmark")
    gen_args(s)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--mp0", type=float, default=100.0)
    s.add_argument("--md0", type=float, default=100.0)
    s.add_argument("--growth", type=float, default=10.0)
    s.add_argument("--kappa", type=float, default=10.0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--family", help="comma list of eps: bench the counterexample family")
    s.add_argument("--csv")
    s.add_argument("--instances-dir")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("example", help="write the built-in counterexample")
    s.add_argument("--eps", type=float, default=0.01)
    s.add_argument("--out")
    s.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = SimplexOptions.from_env()
    try:
        return args.func(args, opts)
    except UsageError as exc:
        print(f"bigmlab: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except InstanceError as exc:
        print(f"bigmlab: bad instance file: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
