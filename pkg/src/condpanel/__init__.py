"""Identification and conditional maximum likelihood for AR(1) dynamic panel logit
models with first-order Markov feedback in a discrete covariate."""

__version__ = "0.1.0"

from .enumeration import Block, block_of, enumerate_paths, partition_blocks  # noqa: E402
from .estimation import FitResult, fit_cmle, profile, std_errors  # noqa: E402
from .estimator import ConditionalLogitPanel, check_panel  # noqa: E402
from .identification import (Criterion, IdentificationReport, check_identification,  # noqa: E402
                             dataset_identification, difference_vectors)
from .likelihood import (CondLikContext, FeedbackKernel, cond_log_lik, hessian,  # noqa: E402
                         joint_prob_full, score)
from .model import (FeedbackSpec, InitialCondition, PanelDataset, Path, Support, Theta,  # noqa: E402
                    validate_path)
from .simulation import DGPConfig, monte_carlo, simulate_panel  # noqa: E402
from .statistics import SufficientStatistic, TargetStats, sufficient_statistic, target_stats  # noqa: E402

__all__ = [
    "Block", "block_of", "enumerate_paths", "partition_blocks",
    "FitResult", "fit_cmle", "profile", "std_errors",
    "ConditionalLogitPanel", "check_panel",
    "Criterion", "IdentificationReport", "check_identification", "dataset_identification",
    "difference_vectors",
    "CondLikContext", "FeedbackKernel", "cond_log_lik", "hessian", "joint_prob_full", "score",
    "FeedbackSpec", "InitialCondition", "PanelDataset", "Path", "Support", "Theta", "validate_path",
    "DGPConfig", "monte_carlo", "simulate_panel",
    "SufficientStatistic", "TargetStats", "sufficient_statistic", "target_stats",
]
