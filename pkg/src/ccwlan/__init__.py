"""Coded caching delivery over multi-helper wireless networks."""
from .experiment import ExperimentConfig, __version__, run_experiment
from .fairness import FairnessObjective, brute_force_fairness, maximize_fairness
from .kernels import BACKEND
from .oracle import verify_policy, verify_schedule
from .placement import PlacementParams, compute_t
from .policy import build_policy_families, enumerate_policies
from .topology import ActivationPattern, NetworkTopology, canonical_figure1, coverage_sets

__all__ = [
    "ActivationPattern",
    "BACKEND",
    "ExperimentConfig",
    "FairnessObjective",
    "NetworkTopology",
    "PlacementParams",
    "__version__",
    "brute_force_fairness",
    "build_policy_families",
    "canonical_figure1",
    "compute_t",
    "coverage_sets",
    "enumerate_policies",
    "maximize_fairness",
    "run_experiment",
    "verify_policy",
    "verify_schedule",
]
