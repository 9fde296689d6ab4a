"""Random search over penalty-weight sets with k-fold cross-validation.

Every score variant is ranked on the same candidate list and the same folds,
so one pass over (candidate, fold) fits optimizes all variants at once.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, compute_group_stats
from .model import FittedModel, PenaltyWeights, SolverConfig, fit_weighted_logistic
from .reduction import fit_via_reduction
from .scoring import SYNTHESES, Evaluation, ScoreConfig, evaluate_predictions, score

DEFAULT_ALPHAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)

# distinct sub-streams so candidate draws and fold shuffles never share bits
_CANDIDATE_STREAM = 0
_FOLD_STREAM = 1


class SearchError(RuntimeError):
    """A search run cannot proceed (bad folds, failed candidate fit)."""


def default_score_grid(threshold: float = 0.5) -> tuple[ScoreConfig, ...]:
    """The full alpha-by-synthesis grid: ten fairness weights per synthesis."""
    return tuple(
        ScoreConfig(alpha=alpha, synthesis=synth, threshold=threshold)
        for synth in SYNTHESES
        for alpha in DEFAULT_ALPHAS
    )


@dataclass(frozen=True)
class SearchConfig:
    """Candidate count, log10 search bounds, fold count, seed, and score grid."""

    num_candidates: int = 40
    log10_lower: float = -3.0
    log10_upper: float = 1.0
    folds: int = 3
    seed: int = 0
    score_variants: tuple[ScoreConfig, ...] = field(default_factory=default_score_grid)
    stratify: bool = True

    def __post_init__(self) -> None:
        if self.num_candidates < 1:
            raise ValueError("num_candidates must be positive")
        if not self.log10_lower < self.log10_upper:
            raise ValueError("log10_lower must be strictly below log10_upper")
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        object.__setattr__(self, "score_variants", tuple(self.score_variants))
        if not self.score_variants:
            raise ValueError("need at least one score variant")


def draw_candidates(cfg: SearchConfig, num_groups: int) -> list[PenaltyWeights]:
    """Penalty vectors with independent log-uniform entries, pinned by the seed."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _CANDIDATE_STREAM]))
    exponents = rng.uniform(cfg.log10_lower, cfg.log10_upper, size=(cfg.num_candidates, num_groups))
    return [PenaltyWeights(10.0 ** row) for row in exponents]


def make_folds(n: int, folds: int, seed: int, outcomes=None) -> list[np.ndarray]:
    """Partition range(n) into near-equal validation folds.

    Passing ``outcomes`` stratifies the split by label so fold prevalences
    track the full-sample prevalence. Deterministic given the seed.
    """
    if folds > n:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _FOLD_STREAM]))
    assignment = np.empty(n, dtype=np.int64)
    if outcomes is None:
        order = rng.permutation(n)
        assignment[order] = np.arange(n) % folds
    else:
        y = np.asarray(outcomes)
        for label in (0, 1):
            idx = np.flatnonzero(y == label)
            rng.shuffle(idx)
            assignment[idx] = np.arange(idx.size) % folds
    return [np.flatnonzero(assignment == f) for f in range(folds)]


@dataclass(frozen=True)
class VariantResult:
    """Winning candidate for one score variant, refit on the full data."""

    config: ScoreConfig
    best_lambdas: PenaltyWeights
    best_score: float
    candidate_index: int
    fold_scores: tuple[float, ...]
    model: FittedModel


@dataclass(frozen=True)
class SearchResult:
    """Per-variant winners plus the full candidate score matrix for audit."""

    variants: tuple[VariantResult, ...]
    candidates: tuple[PenaltyWeights, ...]
    mean_scores: np.ndarray  # (num_candidates, num_variants)
    fold_scores: np.ndarray  # (num_candidates, num_variants, folds)
    baseline_model: FittedModel

    def to_dict(self) -> dict:
        return {
            "candidates": [[float(v) for v in c.lambdas] for c in self.candidates],
            "mean_scores": [[float(v) for v in row] for row in self.mean_scores],
            "variants": [
                {
                    "label": v.config.label,
                    "alpha": v.config.alpha,
                    "synthesis": v.config.synthesis,
                    "threshold": v.config.threshold,
                    "best_lambdas": [float(x) for x in v.best_lambdas.lambdas],
                    "best_score": v.best_score,
                    "candidate_index": v.candidate_index,
                    "fold_scores": list(v.fold_scores),
                }
                for v in self.variants
            ],
        }


def _check_split_positives(split: Dataset, fold_index: int, part: str) -> None:
    stats = compute_group_stats(split)
    zero = np.flatnonzero(stats.group_positive_counts == 0)
    problem = None
    if zero.size:
        problem = f"group '{split.group_names[zero[0]]}'"
    elif stats.reference_positive_count == 0:
        problem = "the reference group"
    if problem:
        raise SearchError(
            f"fold {fold_index}: {problem} has no positive outcomes in the {part} split; "
            "stratify the folds or use fewer of them"
        )


def run_search(
    dataset: Dataset,
    cfg: SearchConfig,
    solver: SolverConfig = SolverConfig(),
    *,
    threads: int = 1,
) -> SearchResult:
    """Cross-validated random search, then a full-data refit per score variant.

    Deterministic for fixed (dataset, cfg, solver) regardless of ``threads``:
    no task draws randomness and every result lands in a per-index slot, so
    completion order cannot matter. Ties on the mean CV score go to the
    lowest candidate index.
    """
    candidates = draw_candidates(cfg, dataset.num_groups)
    validation_folds = make_folds(
        dataset.n, cfg.folds, cfg.seed, dataset.outcomes if cfg.stratify else None
    )
    all_rows = np.arange(dataset.n)
    splits = []
    for fold_index, val_idx in enumerate(validation_folds):
        train_idx = np.setdiff1d(all_rows, val_idx)
        train, val = dataset.subset(train_idx), dataset.subset(val_idx)
        _check_split_positives(train, fold_index, "training")
        _check_split_positives(val, fold_index, "validation")
        splits.append((train, val))

    thresholds = sorted({v.threshold for v in cfg.score_variants})

    def fold_baseline(fold_index: int) -> dict[float, Evaluation]:
        train, val = splits[fold_index]
        baseline = fit_weighted_logistic(train.features, train.outcomes, np.ones(train.n), solver)
        probabilities = baseline.predict_proba(val.features)
        return {t: evaluate_predictions(val, probabilities, t) for t in thresholds}

    baseline_evals = [fold_baseline(f) for f in range(cfg.folds)]

    num_candidates = len(candidates)
    num_variants = len(cfg.score_variants)
    fold_scores = np.empty((num_candidates, num_variants, cfg.folds))

    def run_cell(candidate_index: int, fold_index: int) -> list[float]:
        train, val = splits[fold_index]
        try:
            model = fit_via_reduction(train, candidates[candidate_index], solver)
        except Exception as err:
            raise SearchError(
                f"candidate {candidate_index}, fold {fold_index}: {err}"
            ) from err
        probabilities = model.predict_proba(val.features)
        evals = {t: evaluate_predictions(val, probabilities, t) for t in thresholds}
        return [
            score(evals[v.threshold], baseline_evals[fold_index][v.threshold], v).score
            for v in cfg.score_variants
        ]

    cells = [(c, f) for c in range(num_candidates) for f in range(cfg.folds)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for (c, f), cell in zip(cells, pool.map(lambda cf: run_cell(*cf), cells)):
                fold_scores[c, :, f] = cell
    else:
        for c, f in cells:
            fold_scores[c, :, f] = run_cell(c, f)

    mean_scores = fold_scores.mean(axis=2)

    baseline_model = fit_weighted_logistic(
        dataset.features,
        dataset.outcomes,
        np.ones(dataset.n),
        solver,
        feature_names=dataset.feature_names,
        threshold=cfg.score_variants[0].threshold,
    )

    refits: dict[tuple, FittedModel] = {}
    variants = []
    for variant_index, variant_cfg in enumerate(cfg.score_variants):
        best = int(np.argmax(mean_scores[:, variant_index]))
        lambdas = candidates[best]
        key = (tuple(lambdas.lambdas), variant_cfg.threshold)
        if key not in refits:
            refits[key] = fit_via_reduction(dataset, lambdas, solver, threshold=variant_cfg.threshold)
        variants.append(
            VariantResult(
                config=variant_cfg,
                best_lambdas=lambdas,
                best_score=float(mean_scores[best, variant_index]),
                candidate_index=best,
                fold_scores=tuple(float(s) for s in fold_scores[best, variant_index]),
                model=refits[key],
            )
        )

    return SearchResult(
        variants=tuple(variants),
        candidates=tuple(candidates),
        mean_scores=mean_scores,
        fold_scores=fold_scores,
        baseline_model=baseline_model,
    )
