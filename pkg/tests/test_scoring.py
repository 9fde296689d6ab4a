import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairpen.data import GroupStats
from fairpen.scoring import (
    Evaluation,
    ScoreConfig,
    clamped_synthesis,
    evaluate_predictions,
    rescaled_accuracy,
    rescaled_unfairness,
    score,
)

from conftest import random_dataset


def stats_for(sizes):
    sizes = np.asarray(sizes)
    return GroupStats(sizes, np.maximum(sizes // 2, 1), 5)


def biased_baseline_probs(dataset, rng):
    """Probabilities that track the outcome but under-score group members,
    so the baseline is accurate (> 0.5) and unfair (positive gaps)."""
    in_any_group = dataset.group_memberships.max(axis=1)
    raw = 0.42 + 0.4 * dataset.outcomes - 0.4 * in_any_group + 0.05 * rng.random(dataset.n)
    return np.clip(raw, 0.01, 0.99)


class TestRescaledAccuracy:
    def test_anchors(self):
        assert rescaled_accuracy(0.9, 0.9) == 0.0
        assert rescaled_accuracy(0.5, 0.9) == 1.0

    def test_direct_arithmetic(self):
        assert rescaled_accuracy(0.8, 0.9) == pytest.approx(0.25)

    def test_beating_baseline_goes_negative(self):
        assert rescaled_accuracy(0.95, 0.9) < 0.0

    def test_below_coinflip_exceeds_one(self):
        assert rescaled_accuracy(0.4, 0.9) > 1.0

    def test_degenerate_baseline_rejected(self):
        with pytest.raises(ValueError, match="0.5"):
            rescaled_accuracy(0.6, 0.5)


class TestRescaledUnfairness:
    def test_fully_fair_candidate_scores_zero(self):
        stats = stats_for([10, 20])
        assert rescaled_unfairness([-0.2, 0.0], [0.3, 0.1], stats, "population_weighted") == 0.0
        assert rescaled_unfairness([-0.2, -0.5], [0.3, 0.1], stats, "maximum") == 0.0

    def test_candidate_equal_to_baseline_scores_one(self):
        stats = stats_for([10, 20])
        gaps = [0.25, 0.1]
        for synthesis in ("population_weighted", "group_weighted", "maximum"):
            assert rescaled_unfairness(gaps, gaps, stats, synthesis) == 1.0

    def test_direct_arithmetic(self):
        stats = stats_for([100, 300])
        value = rescaled_unfairness([0.1, -0.2], [0.2, 0.2], stats, "population_weighted")
        assert value == pytest.approx((100 * 0.1) / (100 * 0.2 + 300 * 0.2))

    def test_degenerate_denominator(self):
        stats = stats_for([10, 10])
        assert rescaled_unfairness([0.0, -0.1], [-0.3, 0.0], stats, "maximum") == 0.0
        assert rescaled_unfairness([0.2, 0.0], [-0.3, 0.0], stats, "maximum") == 1.0

    @given(
        st.lists(st.floats(min_value=-0.5, max_value=0.5), min_size=1, max_size=4),
        st.lists(st.floats(min_value=-0.5, max_value=0.5), min_size=1, max_size=4),
    )
    def test_never_negative(self, candidate, baseline):
        k = min(len(candidate), len(baseline))
        stats = stats_for([7] * k)
        value = rescaled_unfairness(candidate[:k], baseline[:k], stats, "group_weighted")
        assert value >= 0.0


class TestClampedSynthesis:
    def test_clamps_before_weighting(self):
        stats = stats_for([50, 50])
        assert clamped_synthesis([-0.4, 0.2], stats, "population_weighted") == pytest.approx(0.1)
        assert clamped_synthesis([-0.4, 0.2], stats, "maximum") == pytest.approx(0.2)
        assert clamped_synthesis([-0.4, -0.2], stats, "maximum") == 0.0

    def test_unknown_synthesis(self):
        with pytest.raises(ValueError, match="synthesis"):
            clamped_synthesis([0.1], stats_for([5]), "median")


class TestScore:
    def test_self_comparison_anchor(self, rng):
        d = random_dataset(rng, n=40, p=2, num_groups=2)
        evaluation = evaluate_predictions(d, biased_baseline_probs(d, rng), 0.5)
        assert (np.maximum(evaluation.tpr_gaps, 0) > 0).any()
        for alpha in (0.0, 0.3, 1.0):
            result = score(evaluation, evaluation, ScoreConfig(alpha=alpha))
            assert result.rescaled_accuracy == 0.0
            assert result.rescaled_unfairness == 1.0
            assert result.score == -alpha

    def test_score_identity_exact(self, rng):
        d = random_dataset(rng, n=30, p=2, num_groups=2)
        baseline = evaluate_predictions(d, biased_baseline_probs(d, rng), 0.5)
        candidate = evaluate_predictions(d, rng.random(30), 0.5)
        cfg = ScoreConfig(alpha=0.37)
        result = score(candidate, baseline, cfg)
        assert -result.score == cfg.alpha * result.rescaled_unfairness + (1 - cfg.alpha) * result.rescaled_accuracy

    def test_alpha_zero_ranks_by_accuracy(self, rng):
        d = random_dataset(rng, n=60, p=2, num_groups=2)
        baseline = evaluate_predictions(d, biased_baseline_probs(d, rng), 0.5)
        candidates = [evaluate_predictions(d, rng.random(60), 0.5) for _ in range(12)]
        cfg = ScoreConfig(alpha=0.0)
        scores = [score(c, baseline, cfg).score for c in candidates]
        accuracies = [c.accuracy for c in candidates]
        assert int(np.argmax(scores)) == int(np.argmax(accuracies))

    def test_alpha_one_ranks_by_clamped_unfairness(self, rng):
        d = random_dataset(rng, n=60, p=2, num_groups=2)
        baseline = evaluate_predictions(d, biased_baseline_probs(d, rng), 0.5)
        assert clamped_synthesis(baseline.tpr_gaps, baseline.stats, "population_weighted") > 0.0
        candidates = [evaluate_predictions(d, rng.random(60), 0.5) for _ in range(12)]
        cfg = ScoreConfig(alpha=1.0)
        scores = [score(c, baseline, cfg).score for c in candidates]
        unfairness = [clamped_synthesis(c.tpr_gaps, c.stats, "population_weighted") for c in candidates]
        assert int(np.argmax(scores)) == int(np.argmin(unfairness))

    def test_monotone_in_both_terms(self):
        stats = stats_for([10, 10])
        baseline = Evaluation(accuracy=0.9, tpr_gaps=np.array([0.2, 0.1]), stats=stats)
        cfg = ScoreConfig(alpha=0.5)
        better_fair = Evaluation(accuracy=0.8, tpr_gaps=np.array([0.1, 0.05]), stats=stats)
        worse_fair = Evaluation(accuracy=0.8, tpr_gaps=np.array([0.2, 0.1]), stats=stats)
        assert score(better_fair, baseline, cfg).score > score(worse_fair, baseline, cfg).score
        better_acc = Evaluation(accuracy=0.85, tpr_gaps=np.array([0.2, 0.1]), stats=stats)
        assert score(better_acc, baseline, cfg).score > score(worse_fair, baseline, cfg).score

    def test_per_group_unfairness_clamped(self, rng):
        d = random_dataset(rng, n=40, p=1, num_groups=3)
        baseline = evaluate_predictions(d, rng.random(40), 0.5)
        candidate = evaluate_predictions(d, rng.random(40), 0.5)
        result = score(candidate, baseline, ScoreConfig(alpha=0.5))
        assert all(v >= 0 for v in result.per_group_unfairness)


class TestScoreConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            ScoreConfig(alpha=1.2)
        with pytest.raises(ValueError, match="synthesis"):
            ScoreConfig(alpha=0.5, synthesis="mean")
        with pytest.raises(ValueError, match="threshold"):
            ScoreConfig(alpha=0.5, threshold=1.0)

    def test_label(self):
        assert ScoreConfig(alpha=0.5, synthesis="maximum").label == "maximum_a0.5"
        assert ScoreConfig(alpha=0.99).label == "population_weighted_a0.99"
