"""Cost-sensitive rewrite of the penalized objective, and the weighted
classification fit built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import Dataset
from .model import FittedModel, SolverConfig, fit_weighted_logistic, penalty_row_multipliers


@dataclass(frozen=True)
class ReducedProblem:
    """Per-row weights, modified labels, and the classification costs behind them.

    Invariants: ``sample_weights == |negative_costs - positive_costs|`` and
    ``modified_outcomes == (negative_costs > positive_costs)`` with strict
    inequality, so an exact cost tie yields weight 0 and label 0.
    """

    sample_weights: np.ndarray
    modified_outcomes: np.ndarray
    positive_costs: np.ndarray
    negative_costs: np.ndarray

    def __post_init__(self) -> None:
        for name in ("sample_weights", "modified_outcomes", "positive_costs", "negative_costs"):
            arr = np.array(getattr(self, name), copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def audit_frame(self) -> pd.DataFrame:
        """Tabular dump of the reduction for inspection (CLI audit flag)."""
        return pd.DataFrame(
            {
                "row": np.arange(self.sample_weights.size),
                "weight": self.sample_weights,
                "modified_outcome": self.modified_outcomes,
                "positive_cost": self.positive_costs,
                "negative_cost": self.negative_costs,
            }
        )


def reduce_problem(dataset: Dataset, lambdas) -> ReducedProblem:
    """Rewrite the penalized fit as weighted classification with new labels.

    Classifying row i positive costs ``1 - Y_i + Y_i * s_i`` and negative
    costs ``Y_i``, where ``s_i`` accumulates the penalty contributions of the
    row's memberships (see ``penalty_row_multipliers``). Positive-outcome
    group members earn negative positive-classification costs and therefore
    extra weight; sufficiently penalized reference positives have their label
    flipped to 0.
    """
    s = penalty_row_multipliers(dataset, lambdas)
    y = dataset.outcomes.astype(np.float64)
    positive_costs = 1.0 - y + y * s
    negative_costs = y
    weights = np.abs(negative_costs - positive_costs)
    modified = (negative_costs > positive_costs).astype(np.int8)
    return ReducedProblem(weights, modified, positive_costs, negative_costs)


def fit_via_reduction(
    dataset: Dataset,
    lambdas,
    cfg: SolverConfig = SolverConfig(),
    *,
    threshold: float = 0.5,
) -> FittedModel:
    """Production fitting path: build the reduction, then fit weighted logistic."""
    reduced = reduce_problem(dataset, lambdas)
    return fit_weighted_logistic(
        dataset.features,
        reduced.modified_outcomes,
        reduced.sample_weights,
        cfg,
        feature_names=dataset.feature_names,
        threshold=threshold,
    )
