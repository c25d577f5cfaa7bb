"""Generalizability of experimental studies.

How many experiments does a study need before its ranking of alternatives
would come out similarly on a fresh set of experiments? Results are rankings
(or score vectors), similarity between samples of results is the maximum mean
discrepancy under a kernel on rankings, and the required size follows from a
power law between sample size and MMD quantiles.
"""

from .exceptions import (
    DegenerateDistributionError,
    FitError,
    GenrankError,
    InputError,
    NumericError,
    SizeError,
)
from .kernels import KernelBounds, KernelSpec, epsilon_star, gram_matrix, kernel_bounds, kernel_eval, median_gamma
from .mmd import EmpiricalSample, empirical_quantile, generalizability, mmd_biased, mmd_distribution, quantile_curve
from .powerlaw import (
    MmdQuantileCurve,
    PowerLawFit,
    closed_form_quantile,
    distribution_free_epsilon,
    fit_quantile_curve,
    predict_n_star,
)
from .ranking import AlternativeSet, Ranking, borda_count, discordant_pairs, ranking_from_scores, top_k_tiers
from .synthetic import (
    DiscreteRankingDistribution,
    enumerate_rankings,
    estimator_accuracy_experiment,
    explicit_distribution,
    sample_from,
    two_point_distribution,
    uniform_distribution,
)
from .workflow import GenRequirement, WorkflowReport, assess_study, run_generalizable_study

__version__ = "0.1.0"

__all__ = [
    "AlternativeSet",
    "DegenerateDistributionError",
    "DiscreteRankingDistribution",
    "EmpiricalSample",
    "FitError",
    "GenRequirement",
    "GenrankError",
    "InputError",
    "KernelBounds",
    "KernelSpec",
    "MmdQuantileCurve",
    "NumericError",
    "PowerLawFit",
    "Ranking",
    "SizeError",
    "WorkflowReport",
    "assess_study",
    "borda_count",
    "closed_form_quantile",
    "discordant_pairs",
    "distribution_free_epsilon",
    "empirical_quantile",
    "enumerate_rankings",
    "epsilon_star",
    "estimator_accuracy_experiment",
    "explicit_distribution",
    "fit_quantile_curve",
    "generalizability",
    "gram_matrix",
    "kernel_bounds",
    "kernel_eval",
    "median_gamma",
    "mmd_biased",
    "mmd_distribution",
    "predict_n_star",
    "quantile_curve",
    "ranking_from_scores",
    "run_generalizable_study",
    "sample_from",
    "top_k_tiers",
    "two_point_distribution",
    "uniform_distribution",
]
