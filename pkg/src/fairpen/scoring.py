"""Candidate ranking: rescaled accuracy, rescaled unfairness, and the
composite score that trades them off."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, GroupStats, compute_group_stats
from .metrics import classification_metrics, threshold_predictions, tpr_gaps

SYNTHESES = ("population_weighted", "group_weighted", "maximum")


@dataclass(frozen=True)
class ScoreConfig:
    """Fairness weight alpha, synthesis mechanism, and decision threshold.

    alpha = 0 ranks candidates purely by accuracy; alpha = 1 purely by the
    clamped synthesized unfairness.
    """

    alpha: float
    synthesis: str = "population_weighted"
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.synthesis not in SYNTHESES:
            raise ValueError(f"synthesis must be one of {SYNTHESES}, got '{self.synthesis}'")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly inside (0, 1)")

    @property
    def label(self) -> str:
        return f"{self.synthesis}_a{self.alpha:g}"


@dataclass(frozen=True)
class Evaluation:
    """Everything the score needs from one model on one evaluation split."""

    accuracy: float
    tpr_gaps: np.ndarray
    stats: GroupStats


def evaluate_predictions(dataset: Dataset, probabilities, threshold: float) -> Evaluation:
    """Threshold probabilities and collect accuracy plus signed per-group gaps."""
    predictions = threshold_predictions(probabilities, threshold)
    accuracy = classification_metrics(dataset.outcomes, predictions).accuracy
    gaps = tpr_gaps(dataset.outcomes, predictions, dataset)
    return Evaluation(accuracy=accuracy, tpr_gaps=gaps, stats=compute_group_stats(dataset))


def rescaled_accuracy(candidate_accuracy: float, baseline_accuracy: float) -> float:
    """0 when the candidate ties the unpenalized baseline, 1 at coin-flip accuracy.

    Negative when the candidate beats the baseline, above 1 when it is worse
    than 0.5. Undefined for baselines at or below coin-flip accuracy.
    """
    if baseline_accuracy <= 0.5:
        raise ValueError(
            f"baseline accuracy {baseline_accuracy:.4f} is not above 0.5; rescaling is undefined"
        )
    return (baseline_accuracy - candidate_accuracy) / (baseline_accuracy - 0.5)


def clamped_synthesis(gaps, stats: GroupStats, synthesis: str) -> float:
    """Synthesize per-group gaps after clamping each at 0 (only disadvantage counts)."""
    clamped = np.maximum(np.asarray(gaps, dtype=np.float64), 0.0)
    if synthesis == "population_weighted":
        sizes = stats.group_sizes.astype(np.float64)
        return float(sizes @ clamped / sizes.sum())
    if synthesis == "group_weighted":
        return float(clamped.mean())
    if synthesis == "maximum":
        return float(clamped.max())
    raise ValueError(f"unknown synthesis '{synthesis}'")


def rescaled_unfairness(candidate_gaps, baseline_gaps, stats: GroupStats, synthesis: str) -> float:
    """Clamped synthesized unfairness relative to the unpenalized baseline.

    0 when the candidate removes all unfairness, 1 when it matches the
    baseline. A fully fair baseline makes the ratio degenerate; then the
    result is 0 if the candidate is also fully fair and 1 otherwise.
    """
    numerator = clamped_synthesis(candidate_gaps, stats, synthesis)
    denominator = clamped_synthesis(baseline_gaps, stats, synthesis)
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else 1.0
    return numerator / denominator


@dataclass(frozen=True)
class ScoreResult:
    """Composite score (higher is better) and the terms that produced it."""

    score: float
    rescaled_accuracy: float
    rescaled_unfairness: float
    raw_accuracy: float
    per_group_unfairness: tuple[float, ...]


def score(candidate: Evaluation, baseline: Evaluation, cfg: ScoreConfig) -> ScoreResult:
    """score = -(alpha * rescaled unfairness + (1 - alpha) * rescaled accuracy)."""
    a_rs = rescaled_accuracy(candidate.accuracy, baseline.accuracy)
    u_rs = rescaled_unfairness(candidate.tpr_gaps, baseline.tpr_gaps, candidate.stats, cfg.synthesis)
    composite = -(cfg.alpha * u_rs + (1.0 - cfg.alpha) * a_rs)
    return ScoreResult(
        score=composite,
        rescaled_accuracy=a_rs,
        rescaled_unfairness=u_rs,
        raw_accuracy=candidate.accuracy,
        per_group_unfairness=tuple(np.maximum(candidate.tpr_gaps, 0.0)),
    )
