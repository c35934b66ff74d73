"""Success-probability bounds for load disaggregation under Gaussian noise.

Closed-form and Monte-Carlo upper bounds on the probability that any
disaggregation algorithm distinguishes a set of scenarios, given the
noiseless aggregate signal each scenario produces.
"""

from .detection import (
    DiscretePrior,
    HalfspaceSystem,
    Hyperplane,
    LinearSystemBoundInput,
    NeymanPearsonRule,
    ProjectionStats,
    decision_hyperplane,
    halfspace_system,
    largest_singular_value,
    linear_system_upper_bound,
    log_likelihood_ratio,
    map_classify,
    np_threshold,
    pairwise_success_probability,
    projection_stats,
)
from .montecarlo import (
    McConfig,
    McEstimate,
    collection_success_probability,
    evaluate_estimator,
    nway_success_probability,
    orthant_probability,
    sample_gaussian,
)
from .noise import NoiseModel
from .signals import (
    DeviceSignal,
    SamplingPlan,
    ScenarioMean,
    ScenarioSpec,
    compose_scenario_mean,
    decimate,
    load_signal_csv,
    phase_variants,
    synth_pulse,
)

__version__ = "0.1.0"

__all__ = [
    "DiscretePrior",
    "HalfspaceSystem",
    "Hyperplane",
    "LinearSystemBoundInput",
    "NeymanPearsonRule",
    "ProjectionStats",
    "decision_hyperplane",
    "halfspace_system",
    "largest_singular_value",
    "linear_system_upper_bound",
    "log_likelihood_ratio",
    "map_classify",
    "np_threshold",
    "pairwise_success_probability",
    "projection_stats",
    "McConfig",
    "McEstimate",
    "collection_success_probability",
    "evaluate_estimator",
    "nway_success_probability",
    "orthant_probability",
    "sample_gaussian",
    "NoiseModel",
    "DeviceSignal",
    "SamplingPlan",
    "ScenarioMean",
    "ScenarioSpec",
    "compose_scenario_mean",
    "decimate",
    "load_signal_csv",
    "phase_variants",
    "synth_pulse",
]
