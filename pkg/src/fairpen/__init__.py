"""Penalized fair classification for multiple overlapping groups.

Binary classifiers with per-group true-positive-rate-disparity penalties,
fit efficiently through a cost-sensitive reduction to weighted logistic
regression, with an automatic penalty-weight random search and a synthetic
replication harness.
"""

__version__ = "0.1.0"

from .data import DataSchema, Dataset, DataValidationError, GroupStats, compute_group_stats, load_csv, save_csv
from .metrics import (
    ClassificationMetrics,
    FairnessReport,
    SynthesizedUnfairness,
    UndefinedRateError,
    classification_metrics,
    fairness_report,
    synthesize,
    threshold_predictions,
    tpr_gap,
    tpr_gap_soft,
    tpr_gaps,
)
from .model import (
    ConvergenceError,
    FittedModel,
    PenaltyWeights,
    SeparationError,
    SolverConfig,
    fit_penalized_direct,
    fit_weighted_logistic,
    penalized_gradient,
    penalized_loss,
)
from .reduction import ReducedProblem, fit_via_reduction, reduce_problem
from .scoring import Evaluation, ScoreConfig, ScoreResult, evaluate_predictions, rescaled_accuracy, rescaled_unfairness, score
from .search import SearchConfig, SearchError, SearchResult, VariantResult, default_score_grid, draw_candidates, make_folds, run_search
from .simulate import (
    EvalMetrics,
    ReplicationSummary,
    SimSetting,
    evaluate_model,
    frontier_rows,
    generate,
    pareto_frontier,
    run_replications,
    setting,
    summarize,
)
