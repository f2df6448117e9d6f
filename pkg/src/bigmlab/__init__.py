"""Linear bilevel programs via KKT and big-M reformulations, with a global oracle."""

__version__ = "0.1.0"

from .lp_core import LinearProgram, LpSolution, SimplexOptions, dual_range, solve_lp
from .milp import MilpSolution, enumerate_patterns, solve_milp_bnb
from .model import (BilevelSolution, LbpInstance, builtin_counterexample,
                    normalize_sense, validate)
from .oracle import (certify_candidate, solve_global_oracle,
                     verify_bilevel_feasible)
from .reform import (BigMConfig, KktSystem, MilpProblem, bigm_reformulate,
                     kkt_reformulate, solve_lp_fixed_pattern)
from .tuner import estimate_bigm_local, tune_trial_and_error

__all__ = [
    "BigMConfig", "BilevelSolution", "KktSystem", "LbpInstance", "LinearProgram",
    "LpSolution", "MilpProblem", "MilpSolution", "SimplexOptions",
    "bigm_reformulate", "builtin_counterexample", "certify_candidate",
    "dual_range", "enumerate_patterns", "estimate_bigm_local",
    "kkt_reformulate", "normalize_sense", "solve_global_oracle", "solve_lp",
    "solve_lp_fixed_pattern", "solve_milp_bnb", "tune_trial_and_error",
    "validate", "verify_bilevel_feasible",
]
