"""True-positive-rate gaps, their synthesis across groups, and classification metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, GroupStats, compute_group_stats


class UndefinedRateError(ValueError):
    """A true-positive-rate denominator has no positive outcomes."""


def _check_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size and not np.isin(arr, (0.0, 1.0)).all():
        raise ValueError(f"{name} must be 0/1 valued")
    return arr


def _check_probabilities(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size and (not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return arr


def threshold_predictions(probabilities, threshold: float) -> np.ndarray:
    """Classify probability >= threshold as positive (inclusive comparison)."""
    probs = _check_probabilities(probabilities)
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie strictly inside (0, 1), got {threshold}")
    return (probs >= threshold).astype(np.int8)


def _positive_mean(values: np.ndarray, outcomes: np.ndarray, mask: np.ndarray, label: str) -> float:
    y = outcomes[mask]
    denominator = y.sum()
    if denominator == 0:
        raise UndefinedRateError(
            f"{label} has no positive outcomes; the unfairness denominator is undefined"
        )
    return float(values[mask] @ y / denominator)


def _gap(outcomes, values, group_index: int, dataset: Dataset) -> float:
    y = _check_binary(outcomes, "outcomes")
    reference_mask = dataset.reference_membership == 1
    group_mask = dataset.group_memberships[:, group_index] == 1
    reference_rate = _positive_mean(values, y, reference_mask, "reference group")
    group_rate = _positive_mean(values, y, group_mask, f"group '{dataset.group_names[group_index]}'")
    return reference_rate - group_rate


def tpr_gap(outcomes, predictions, group_index: int, dataset: Dataset) -> float:
    """Reference-group TPR minus group TPR on hard 0/1 predictions.

    Positive values mean the group's positive cases are flagged less often
    than the reference group's.
    """
    return _gap(outcomes, _check_binary(predictions, "predictions"), group_index, dataset)


def tpr_gap_soft(outcomes, probabilities, group_index: int, dataset: Dataset) -> float:
    """The same gap on predicted probabilities instead of hard labels.

    Differentiable in the probabilities and independent of any decision
    threshold; this is the quantity the penalized loss controls.
    """
    return _gap(outcomes, _check_probabilities(probabilities), group_index, dataset)


def tpr_gaps(outcomes, predictions, dataset: Dataset) -> np.ndarray:
    """Hard-prediction TPR gap for every group, in group order."""
    return np.array([tpr_gap(outcomes, predictions, g, dataset) for g in range(dataset.num_groups)])


@dataclass(frozen=True)
class SynthesizedUnfairness:
    """Per-group gaps combined three ways; signed values pass through as-is."""

    population_weighted: float
    group_weighted: float
    maximum: float


def synthesize(per_group, stats: GroupStats) -> SynthesizedUnfairness:
    """Population-weighted mean, plain mean, and max of per-group gaps."""
    values = np.asarray(per_group, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("need at least one per-group unfairness value")
    if values.size != stats.group_sizes.size:
        raise ValueError("per-group values and group sizes differ in length")
    sizes = stats.group_sizes.astype(np.float64)
    return SynthesizedUnfairness(
        population_weighted=float(sizes @ values / sizes.sum()),
        group_weighted=float(values.mean()),
        maximum=float(values.max()),
    )


@dataclass(frozen=True)
class ClassificationMetrics:
    """Accuracy plus sensitivity/specificity; the latter two are None when undefined."""

    accuracy: float
    sensitivity: float | None
    specificity: float | None


def classification_metrics(outcomes, predictions) -> ClassificationMetrics:
    """Confusion-matrix rates. Zero positives (negatives) leave sensitivity
    (specificity) undefined rather than zero."""
    y = _check_binary(outcomes, "outcomes")
    yhat = _check_binary(predictions, "predictions")
    if y.shape != yhat.shape or y.size == 0:
        raise ValueError("outcomes and predictions must be equal-length, non-empty vectors")
    positives = int((y == 1).sum())
    negatives = y.size - positives
    true_positives = int(((y == 1) & (yhat == 1)).sum())
    true_negatives = int(((y == 0) & (yhat == 0)).sum())
    return ClassificationMetrics(
        accuracy=(true_positives + true_negatives) / y.size,
        sensitivity=true_positives / positives if positives else None,
        specificity=true_negatives / negatives if negatives else None,
    )


@dataclass(frozen=True)
class GroupPerformance:
    name: str
    n: int
    prevalence: float
    sensitivity: float | None
    specificity: float | None
    accuracy: float


@dataclass(frozen=True)
class FairnessReport:
    """Per-group performance plus TPR gaps and their three syntheses."""

    overall: GroupPerformance
    reference: GroupPerformance
    groups: tuple[GroupPerformance, ...]
    tpr_gaps: tuple[float, ...]
    synthesized: SynthesizedUnfairness
    threshold: float

    def to_dict(self) -> dict:
        def row(perf: GroupPerformance) -> dict:
            return {
                "name": perf.name,
                "n": perf.n,
                "prevalence": perf.prevalence,
                "sensitivity": perf.sensitivity,
                "specificity": perf.specificity,
                "accuracy": perf.accuracy,
            }

        return {
            "threshold": self.threshold,
            "groups": [row(g) for g in self.groups],
            "reference": row(self.reference),
            "total": row(self.overall),
            "tpr_gaps": {g.name: gap for g, gap in zip(self.groups, self.tpr_gaps)},
            "unfairness": {
                "population_weighted": self.synthesized.population_weighted,
                "group_weighted": self.synthesized.group_weighted,
                "maximum": self.synthesized.maximum,
            },
        }

    def to_text(self) -> str:
        def fmt(value: float | None) -> str:
            return "   NA" if value is None else f"{value:5.2f}"

        rows = [*self.groups, self.reference, self.overall]
        name_width = max(len(r.name) for r in rows)
        header = f"{'':{name_width}}  {'n':>8}  {'Prevalence':>10}  {'Sensitivity':>11}  {'Specificity':>11}  {'Accuracy':>8}"
        lines = [header]
        for r in rows:
            lines.append(
                f"{r.name:{name_width}}  {r.n:>8}  {r.prevalence:>10.2f}  "
                f"{fmt(r.sensitivity):>11}  {fmt(r.specificity):>11}  {r.accuracy:>8.2f}"
            )
        lines.append("")
        lines.append(f"TPR gaps vs reference (threshold {self.threshold:g}):")
        for g, gap in zip(self.groups, self.tpr_gaps):
            lines.append(f"  {g.name:{name_width}}  {gap:+.4f}")
        s = self.synthesized
        lines.append(
            f"  synthesized: population-weighted {s.population_weighted:+.4f}, "
            f"group-weighted {s.group_weighted:+.4f}, maximum {s.maximum:+.4f}"
        )
        return "\n".join(lines)


def _performance(name: str, outcomes: np.ndarray, predictions: np.ndarray, mask: np.ndarray) -> GroupPerformance:
    y = outcomes[mask]
    metrics = classification_metrics(y, predictions[mask])
    return GroupPerformance(
        name=name,
        n=int(mask.sum()),
        prevalence=float(y.mean()),
        sensitivity=metrics.sensitivity,
        specificity=metrics.specificity,
        accuracy=metrics.accuracy,
    )


def fairness_report(dataset: Dataset, probabilities, threshold: float, reference_name: str = "reference") -> FairnessReport:
    """Evaluate thresholded probabilities on a dataset, group by group."""
    predictions = threshold_predictions(probabilities, threshold)
    outcomes = dataset.outcomes
    group_rows = tuple(
        _performance(name, outcomes, predictions, dataset.group_memberships[:, g] == 1)
        for g, name in enumerate(dataset.group_names)
    )
    reference_row = _performance(reference_name, outcomes, predictions, dataset.reference_membership == 1)
    overall_row = _performance("total", outcomes, predictions, np.ones(dataset.n, dtype=bool))
    gaps = tpr_gaps(outcomes, predictions, dataset)
    return FairnessReport(
        overall=overall_row,
        reference=reference_row,
        groups=group_rows,
        tpr_gaps=tuple(float(g) for g in gaps),
        synthesized=synthesize(gaps, compute_group_stats(dataset)),
        threshold=threshold,
    )
