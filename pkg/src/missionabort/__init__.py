"""Optimal mission-abort under imperfect condition monitoring.

A three-state deterioration process (healthy, defective, failed) with general
sojourn distributions is approximated by an absorbing surrogate Markov chain
built from Erlang mixtures. The resulting finite-horizon stopping problem is
solved by a structure-aware point-based value iteration (or exactly in low
dimensions), and solved policies are evaluated against rule-based benchmarks
by Monte Carlo rollout on the original semi-Markov ground truth.
"""

from .beliefs import ObservationModel
from .distributions import (
    Erlang,
    ErlangMixture,
    Exponential,
    Mixture,
    Weibull,
    erlang_mixture_approx,
    moment_match_rate,
    sup_norm_error,
)
from .simulation import RolloutSummary, TruthSpec, rollout
from .solvers import PbviConfig, exact_backward_ctmc, exact_backward_dimred, pbvi
from .surrogate import SurrogateModel, build_surrogate, build_surrogate_deterministic
from .values import CostModel

__version__ = "0.1.0"

__all__ = [
    "ObservationModel",
    "Erlang",
    "ErlangMixture",
    "Exponential",
    "Mixture",
    "Weibull",
    "erlang_mixture_approx",
    "moment_match_rate",
    "sup_norm_error",
    "RolloutSummary",
    "TruthSpec",
    "rollout",
    "PbviConfig",
    "exact_backward_ctmc",
    "exact_backward_dimred",
    "pbvi",
    "SurrogateModel",
    "build_surrogate",
    "build_surrogate_deterministic",
    "CostModel",
    "__version__",
]
