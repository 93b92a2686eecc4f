"""Forecasting-loss analysis under feature staleness.

Exact generalized entropies and Bayes actions over finite laws, chi-squared
Markov-deviation and train/test mismatch radii, age-of-information
bookkeeping with stochastic ordering, synthetic processes with exactly
computable window laws, and the loss-versus-age analyses built on top.
"""

from .aoi import (
    AgeDistribution,
    AgeProcess,
    DeliveryTrace,
    OrderingVerdict,
    UpperSetWitness,
    age_process,
    empirical_age_distribution,
    sample_path_dominates,
    stochastic_order_multivariate,
    stochastic_order_univariate,
)
from .analysis import (
    DecompositionReport,
    LossCurve,
    TestingComparison,
    TrainingComparison,
    compare_experiments,
    compare_testing_experiments,
    decompose,
    dynamic_joint,
    joint_training_loss,
    loss_curve,
    min_training_loss,
    testing_loss,
)
from .divergence import (
    BetaReport,
    EpsilonReport,
    beta_between,
    chi2_conditional_mi,
    chi2_divergence,
    epsilon_coefficient,
)
from .information import (
    conditional_cross_entropy,
    conditional_entropy,
    conditional_mutual_information,
    cross_entropy,
    mutual_information,
)
from .ingest import (
    Dataset,
    EmpiricalLawProvider,
    Quantizer,
    assemble_dynamic,
    dynamic_age_law,
    empirical_window_law,
    quantize,
    smooth,
)
from .laws import LawProvider, MixtureLawProvider, WindowLaw
from .losses import (
    BayesResult,
    LossSpec,
    bayes_action,
    entropy,
    expected_loss,
    log_loss,
    quadratic_loss,
    table_loss,
    zero_one_loss,
)
from .processes import (
    ExactLawProvider,
    ProcessModel,
    exact_window_law,
    make_hidden_nonmarkov,
    make_markov_observable,
    mix_toward_markov,
    sample_trajectory,
)
from .spaces import JointPmf, OutcomeSpace, Pmf, mix_joints

__version__ = "0.1.0"

__all__ = [
    "AgeDistribution",
    "AgeProcess",
    "BayesResult",
    "BetaReport",
    "Dataset",
    "DecompositionReport",
    "DeliveryTrace",
    "EmpiricalLawProvider",
    "EpsilonReport",
    "ExactLawProvider",
    "JointPmf",
    "LawProvider",
    "LossCurve",
    "LossSpec",
    "MixtureLawProvider",
    "OrderingVerdict",
    "OutcomeSpace",
    "Pmf",
    "ProcessModel",
    "Quantizer",
    "TestingComparison",
    "TrainingComparison",
    "UpperSetWitness",
    "WindowLaw",
    "age_process",
    "assemble_dynamic",
    "bayes_action",
    "beta_between",
    "chi2_conditional_mi",
    "chi2_divergence",
    "compare_experiments",
    "compare_testing_experiments",
    "conditional_cross_entropy",
    "conditional_entropy",
    "conditional_mutual_information",
    "cross_entropy",
    "decompose",
    "dynamic_age_law",
    "dynamic_joint",
    "empirical_age_distribution",
    "empirical_window_law",
    "entropy",
    "epsilon_coefficient",
    "exact_window_law",
    "expected_loss",
    "joint_training_loss",
    "log_loss",
    "loss_curve",
    "make_hidden_nonmarkov",
    "make_markov_observable",
    "min_training_loss",
    "mix_joints",
    "mix_toward_markov",
    "mutual_information",
    "quadratic_loss",
    "quantize",
    "sample_path_dominates",
    "sample_trajectory",
    "smooth",
    "stochastic_order_multivariate",
    "stochastic_order_univariate",
    "table_loss",
    "testing_loss",
    "zero_one_loss",
]
