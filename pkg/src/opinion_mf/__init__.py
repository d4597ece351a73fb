"""Mean-field approximations of opinion dynamics on Erdos-Renyi graphs."""

__version__ = "0.1.0"

from .dynamics import OpinionConfig, SingularSystemError, build_influence, stable_iterate, stable_solve
from .estimators import ExpectedStableOpinion, MeanFieldOpinion
from .matfun import PowerSeries, apply_series, exp_series, norm_star, resolvent, resolvent_series
from .meanfield import MeanFieldSystem, expected_influence, meanfield_stable, neg_binomial_moment
from .montecarlo import Exact, MonteCarlo, NormSpec, gap_phi, gap_power, gap_stable
from .rand_graph import ErModel, Graph, RegimeRule, enumerate_weighted, sample

__all__ = [
    "Exact",
    "ErModel",
    "ExpectedStableOpinion",
    "Graph",
    "MeanFieldOpinion",
    "MeanFieldSystem",
    "MonteCarlo",
    "NormSpec",
    "OpinionConfig",
    "PowerSeries",
    "RegimeRule",
    "SingularSystemError",
    "apply_series",
    "build_influence",
    "enumerate_weighted",
    "exp_series",
    "expected_influence",
    "gap_phi",
    "gap_power",
    "gap_stable",
    "meanfield_stable",
    "neg_binomial_moment",
    "norm_star",
    "resolvent",
    "resolvent_series",
    "sample",
    "stable_iterate",
    "stable_solve",
]
