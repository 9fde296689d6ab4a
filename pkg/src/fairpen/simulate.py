"""Synthetic-cohort generation and the replicated experiment harness.

The generator produces three overlapping groups whose members carry extra
positive-outcome risk that the nine observed covariates cannot fully
explain, so an unpenalized classifier under-detects their positives. The
reference group is everyone belonging to no group. Three named settings
scale the group-membership coefficients from all-moderate to all-small.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .data import Dataset, compute_group_stats
from .metrics import classification_metrics, threshold_predictions, tpr_gaps
from .model import FittedModel, SolverConfig
from .scoring import clamped_synthesis
from .search import SearchConfig, run_search

SETTINGS = {
    1: (0.2, 0.2, 0.2, 0.02, 0.02, 0.02),  # all groups moderately sized
    2: (0.02, 0.2, 0.2, 0.002, 0.02, 0.02),  # group A small
    3: (0.02, 0.02, 0.02, 0.002, 0.002, 0.002),  # all groups small
}
BERNOULLI_RATES = (0.2, 0.4, 0.6, 0.8, 0.95)
FEATURE_NAMES = tuple(f"x{i}" for i in range(1, 10))
GROUP_NAMES = ("gA", "gB", "gC")


@dataclass(frozen=True)
class SimSetting:
    """Membership coefficients c0..c5, sample size, and seed for one draw."""

    c: tuple[float, ...]
    n: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.c)
        if len(c) != 6 or any(v < 0 for v in c):
            raise ValueError("c must hold six nonnegative coefficients")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        object.__setattr__(self, "c", c)


def setting(number: int, *, n: int = 100_000, seed: int = 0) -> SimSetting:
    """Named setting 1, 2, or 3."""
    if number not in SETTINGS:
        raise ValueError(f"unknown simulation setting {number}; choose from {sorted(SETTINGS)}")
    return SimSetting(c=SETTINGS[number], n=n, seed=seed)


def generate(sim: SimSetting) -> Dataset:
    """Draw one synthetic cohort; a fixed draw order makes the seed pin it bit-for-bit."""
    rng = np.random.default_rng(sim.seed)
    n, c = sim.n, sim.c

    x1 = rng.normal(30.0, 15.0, n)
    x2 = rng.normal(30.0, 15.0, n)
    x3 = rng.poisson(15.0, n).astype(np.float64)
    x4 = rng.poisson(15.0, n).astype(np.float64)
    x5, x6, x7, x8, x9 = (rng.binomial(1, rate, n).astype(np.float64) for rate in BERNOULLI_RATES)

    def membership(slope: float, shifted: np.ndarray, direct: float) -> np.ndarray:
        probability = np.clip(slope * shifted + direct * x6 + rng.normal(0.0, 0.02, n), 0.0, 1.0)
        return rng.binomial(1, probability)

    in_a = membership(c[0], x9 + 0.1, c[3])
    in_b = membership(c[1], x7 + 0.05, c[4])
    in_c = membership(c[2], x8 + 0.4, c[5])

    group_c_shift = rng.normal(60.0, 2.0, n)
    latent = (
        x1 / 30.0
        - x2 / 15.0
        + 3.0 * x3 / 50.0
        - x4 / 25.0
        + (2.0 ** (x5 + x6) + 6.0 * x7 + 10.0 * x8 * x9 + 8.0 * x3 * in_a + 6.0 * x4 * in_b + in_c * group_c_shift)
        / 100.0
        + rng.normal(0.0, 1.0, n)
    )
    outcome_probability = np.clip(ndtr(latent), 0.0, 1.0)
    outcomes = rng.binomial(1, outcome_probability)

    features = np.column_stack([x1, x2, x3, x4, x5, x6, x7, x8, x9])
    groups = np.column_stack([in_a, in_b, in_c])
    reference = (groups.max(axis=1) == 0).astype(np.int8)
    return Dataset(features, outcomes, groups, reference, GROUP_NAMES, FEATURE_NAMES)


@dataclass(frozen=True)
class EvalMetrics:
    """Accuracy plus the three synthesized unfairness measures.

    Unfairness counts only groups whose TPR falls below the reference's:
    per-group gaps are clamped at 0 before synthesis, so a group the model
    favors cannot offset one it disadvantages.
    """

    accuracy: float
    population_weighted: float
    group_weighted: float
    maximum: float


METRIC_NAMES = ("accuracy", "population_weighted", "group_weighted", "maximum")


def evaluate_model(model: FittedModel, dataset: Dataset) -> EvalMetrics:
    """Accuracy and clamped synthesized TPR gaps of a model, at its own threshold."""
    probabilities = model.predict_proba(dataset.features)
    predictions = threshold_predictions(probabilities, model.threshold)
    gaps = tpr_gaps(dataset.outcomes, predictions, dataset)
    stats = compute_group_stats(dataset)
    return EvalMetrics(
        accuracy=classification_metrics(dataset.outcomes, predictions).accuracy,
        population_weighted=clamped_synthesis(gaps, stats, "population_weighted"),
        group_weighted=clamped_synthesis(gaps, stats, "group_weighted"),
        maximum=clamped_synthesis(gaps, stats, "maximum"),
    )


@dataclass(frozen=True)
class ReplicationSummary:
    """Held-out metrics for every score variant and the baseline, one replication."""

    replication: int
    baseline: EvalMetrics
    per_variant: dict[str, EvalMetrics]
    selected_lambdas: dict[str, tuple[float, ...]]

    def to_dict(self) -> dict:
        def metrics(m: EvalMetrics) -> dict:
            return {name: getattr(m, name) for name in METRIC_NAMES}

        return {
            "replication": self.replication,
            "baseline": metrics(self.baseline),
            "variants": {label: metrics(m) for label, m in self.per_variant.items()},
            "selected_lambdas": {label: list(lam) for label, lam in self.selected_lambdas.items()},
        }


def _stream_seed(seed: int, replication: int, purpose: int) -> int:
    return int(np.random.SeedSequence([seed, replication, purpose]).generate_state(1, np.uint64)[0])


def run_replications(
    sim: SimSetting,
    reps: int,
    search_cfg: SearchConfig,
    solver_cfg: SolverConfig = SolverConfig(),
    *,
    threads: int = 1,
    drop_features: tuple[str, ...] = (),
) -> list[ReplicationSummary]:
    """Repeat (generate, search, evaluate) with per-replication seed streams.

    Each replication draws a training cohort and an independent evaluation
    cohort of the same size from the same process, searches on the training
    draw, and evaluates every selected model plus the unpenalized baseline on
    the held-out draw.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    thresholds = {v.threshold for v in search_cfg.score_variants}
    if len(thresholds) != 1:
        raise ValueError("simulation runs expect a single decision threshold across score variants")

    summaries = []
    for r in range(reps):
        train = generate(replace(sim, seed=_stream_seed(sim.seed, r, 0)))
        holdout = generate(replace(sim, seed=_stream_seed(sim.seed, r, 1)))
        if drop_features:
            train = train.without_features(drop_features)
            holdout = holdout.without_features(drop_features)
        cfg = replace(search_cfg, seed=_stream_seed(sim.seed, r, 2))
        result = run_search(train, cfg, solver_cfg, threads=threads)
        summaries.append(
            ReplicationSummary(
                replication=r,
                baseline=evaluate_model(result.baseline_model, holdout),
                per_variant={
                    v.config.label: evaluate_model(v.model, holdout) for v in result.variants
                },
                selected_lambdas={
                    v.config.label: tuple(float(x) for x in v.best_lambdas.lambdas)
                    for v in result.variants
                },
            )
        )
    return summaries


def _metric_values(replications, variant: str, metric: str) -> list[float]:
    if variant == "baseline":
        return [getattr(rep.baseline, metric) for rep in replications]
    return [getattr(rep.per_variant[variant], metric) for rep in replications]


def summarize(replications) -> list[dict]:
    """Median and quartiles across replications, per variant and metric."""
    if not replications:
        raise ValueError("need at least one replication")
    variants = ["baseline", *replications[0].per_variant]
    rows = []
    for variant in variants:
        for metric in METRIC_NAMES:
            values = _metric_values(replications, variant, metric)
            rows.append(
                {
                    "variant": variant,
                    "metric": metric,
                    "median": float(np.median(values)),
                    "p25": float(np.percentile(values, 25)),
                    "p75": float(np.percentile(values, 75)),
                }
            )
    return rows


def pareto_frontier(points) -> list[int]:
    """Indices of (accuracy, unfairness) pairs not dominated in both coordinates.

    A point is dominated when another point has accuracy at least as high and
    unfairness at least as low, with strict improvement in one coordinate.
    """
    pairs = [(float(a), float(u)) for a, u in points]
    kept = []
    for i, (acc_i, unf_i) in enumerate(pairs):
        dominated = any(
            acc_j >= acc_i and unf_j <= unf_i and (acc_j > acc_i or unf_j < unf_i)
            for j, (acc_j, unf_j) in enumerate(pairs)
            if j != i
        )
        if not dominated:
            kept.append(i)
    return kept


def frontier_rows(replications, metric: str = "population_weighted") -> list[dict]:
    """Non-dominated (accuracy, unfairness) results across variants and replications."""
    labels = ["baseline", *replications[0].per_variant]
    points, meta = [], []
    for label in labels:
        for rep in replications:
            m = rep.baseline if label == "baseline" else rep.per_variant[label]
            points.append((m.accuracy, getattr(m, metric)))
            meta.append((label, rep.replication))
    return [
        {
            "variant": meta[i][0],
            "replication": meta[i][1],
            "accuracy": points[i][0],
            "unfairness": points[i][1],
        }
        for i in pareto_frontier(points)
    ]
