"""Privacy mechanisms that keep two sources distinguishable under leakage budgets."""

from .eit import CaseTag, ConvergenceError, EitSolution, perfect_privacy_mechanism, solve
from .harness import PRESETS, ExperimentConfig, TradeoffCurve, TradeoffPoint, compare_at, sweep
from .infocore import (
    Distribution,
    Mechanism,
    Perturbation,
    ValidationError,
    chi2_kl_approx,
    chi2_mi_approx,
    entropy,
    kl_divergence,
    mutual_information,
    pushforward,
)
from .oracle import GridSpec, OracleResult, oracle_solve_binary, oracle_solve_general

__version__ = "0.1.0"
