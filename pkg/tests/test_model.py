import numpy as np
import pytest
import statsmodels.api as sm

from fairpen.data import Dataset
from fairpen.metrics import UndefinedRateError, tpr_gap_soft
from fairpen.model import (
    ConvergenceError,
    FittedModel,
    PenaltyWeights,
    SeparationError,
    SolverConfig,
    fit_penalized_direct,
    fit_weighted_logistic,
    penalized_gradient,
    penalized_loss,
    penalty_row_multipliers,
)

from conftest import logistic_dataset, random_dataset
from oracles import central_difference_gradient, loop_penalized_loss


def statsmodels_logit(features, outcomes):
    design = sm.add_constant(features, prepend=False)
    return sm.Logit(outcomes, design).fit(disp=0, method="newton", tol=1e-12, maxiter=200).params


class TestPenaltyWeights:
    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="nonnegative"):
            PenaltyWeights(np.array([0.1, -0.2]))

    def test_zeros(self):
        assert PenaltyWeights.zeros(3).lambdas.tolist() == [0.0, 0.0, 0.0]


class TestFittedModel:
    def test_json_round_trip(self, tmp_path):
        model = FittedModel(np.array([0.5, -1.2]), 0.3, 0.15, ("a", "b"))
        model.save(tmp_path / "m.json")
        back = FittedModel.load(tmp_path / "m.json")
        np.testing.assert_array_equal(back.coefficients, model.coefficients)
        assert back.intercept == model.intercept
        assert back.threshold == model.threshold
        assert back.feature_names == ("a", "b")

    def test_predict_uses_threshold(self):
        model = FittedModel(np.array([1.0]), 0.0, 0.5)
        assert model.predict(np.array([[-1.0], [1.0]])).tolist() == [0, 1]

    def test_feature_count_mismatch(self):
        model = FittedModel(np.array([1.0, 2.0]), 0.0, 0.5)
        with pytest.raises(ValueError, match="feature columns"):
            model.predict_proba(np.zeros((3, 3)))


class TestFitWeightedLogistic:
    def test_unit_weights_match_statsmodels(self, rng):
        d = logistic_dataset(rng, 400, np.array([0.8, -0.5, 0.3]), -0.2)
        model = fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n))
        expected = statsmodels_logit(d.features, d.outcomes)
        fitted = np.append(model.coefficients, model.intercept)
        np.testing.assert_allclose(fitted, expected, atol=1e-6)

    def test_duplicated_row_equals_weight_two(self, rng):
        d = logistic_dataset(rng, 120, np.array([1.0, -1.0]), 0.1)
        weights = np.ones(d.n)
        weights[3] = 2.0
        weighted = fit_weighted_logistic(d.features, d.outcomes, weights)
        dup_features = np.vstack([d.features, d.features[3]])
        dup_outcomes = np.append(d.outcomes, d.outcomes[3])
        duplicated = fit_weighted_logistic(dup_features, dup_outcomes, np.ones(d.n + 1))
        np.testing.assert_allclose(
            np.append(weighted.coefficients, weighted.intercept),
            np.append(duplicated.coefficients, duplicated.intercept),
            atol=1e-8,
        )

    def test_recovers_known_coefficients(self, rng):
        true_beta = np.array([0.7, -0.4, 0.2])
        intercept = -0.3
        d = logistic_dataset(rng, 10_000, true_beta, intercept)
        model = fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n))
        # asymptotic standard errors from the inverse Fisher information
        design = np.column_stack([d.features, np.ones(d.n)])
        p = 1.0 / (1.0 + np.exp(-(design @ np.append(true_beta, intercept))))
        fisher = design.T @ (design * (p * (1 - p))[:, None])
        se = np.sqrt(np.diag(np.linalg.inv(fisher)))
        fitted = np.append(model.coefficients, model.intercept)
        assert np.all(np.abs(fitted - np.append(true_beta, intercept)) < 3 * se)

    def test_weight_scaling_invariance(self, rng):
        d = logistic_dataset(rng, 200, np.array([0.6, -0.6]), 0.0)
        weights = rng.uniform(0.5, 2.0, d.n)
        a = fit_weighted_logistic(d.features, d.outcomes, weights)
        b = fit_weighted_logistic(d.features, d.outcomes, 7.5 * weights)
        np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-7)
        assert a.intercept == pytest.approx(b.intercept, abs=1e-7)

    def test_row_permutation_invariance(self, rng):
        d = logistic_dataset(rng, 150, np.array([0.5, 0.5]), -0.1)
        order = rng.permutation(d.n)
        a = fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n))
        b = fit_weighted_logistic(d.features[order], d.outcomes[order], np.ones(d.n))
        np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-7)

    def test_zero_weight_rows_ignored(self, rng):
        d = logistic_dataset(rng, 100, np.array([1.0, -0.5]), 0.2)
        weights = np.ones(d.n)
        weights[:10] = 0.0
        a = fit_weighted_logistic(d.features, d.outcomes, weights)
        b = fit_weighted_logistic(d.features[10:], d.outcomes[10:], np.ones(d.n - 10))
        np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-7)

    def test_single_class_rejected(self, rng):
        features = rng.normal(size=(20, 2))
        with pytest.raises(ValueError, match="label class"):
            fit_weighted_logistic(features, np.ones(20), np.ones(20))

    def test_negative_weights_rejected(self, rng):
        features = rng.normal(size=(10, 1))
        outcomes = np.tile([0, 1], 5)
        with pytest.raises(ValueError, match="nonnegative"):
            fit_weighted_logistic(features, outcomes, -np.ones(10))

    def test_non_convergence_carries_gradient_norm(self, rng):
        d = logistic_dataset(rng, 100, np.array([1.0]), 0.0, num_groups=1)
        cfg = SolverConfig(max_iterations=1, gradient_tolerance=1e-14)
        with pytest.raises(ConvergenceError, match="gradient max-norm"):
            fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n), cfg)

    def test_separation_detected(self, rng):
        # tiny-margin separable data: coefficients must blow past the guard
        x = np.concatenate([rng.uniform(1e-4, 2e-4, 25), rng.uniform(-2e-4, -1e-4, 25)])
        y = (x > 0).astype(int)
        with pytest.raises(SeparationError, match="ridge"):
            fit_weighted_logistic(x[:, None], y, np.ones(50))

    def test_ridge_rescues_separation(self, rng):
        x = np.concatenate([rng.uniform(1e-4, 2e-4, 25), rng.uniform(-2e-4, -1e-4, 25)])
        y = (x > 0).astype(int)
        cfg = SolverConfig(ridge=1e-4)
        model = fit_weighted_logistic(x[:, None], y, np.ones(50), cfg)
        assert np.isfinite(model.coefficients).all()

    def test_gradient_step_rule_agrees_with_newton(self, rng):
        d = logistic_dataset(rng, 150, np.array([0.4, -0.3]), 0.1)
        newton = fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n))
        gradient = fit_weighted_logistic(
            d.features, d.outcomes, np.ones(d.n), SolverConfig(step_rule="gradient", max_iterations=200_000)
        )
        np.testing.assert_allclose(newton.coefficients, gradient.coefficients, atol=1e-6)


class TestPenalizedLoss:
    def test_zero_lambda_is_cross_entropy(self, rng):
        d = random_dataset(rng, n=40, p=3, num_groups=2)
        beta = rng.normal(size=4)
        design = np.column_stack([d.features, np.ones(d.n)])
        p = 1.0 / (1.0 + np.exp(-(design @ beta)))
        expected = -np.sum(d.outcomes * np.log(p) + (1 - d.outcomes) * np.log(1 - p))
        assert penalized_loss(beta, d, PenaltyWeights.zeros(2)) == pytest.approx(expected, rel=1e-12)

    def test_zero_beta_gives_n_log_two_and_no_penalty(self, rng):
        d = random_dataset(rng, n=30, p=2, num_groups=2)
        lam = PenaltyWeights(np.array([0.7, 1.3]))
        # all probabilities 0.5, so both soft TPR terms equal 0.5 and cancel
        assert penalized_loss(np.zeros(3), d, lam) == pytest.approx(d.n * np.log(2), rel=1e-12)

    def test_matches_formula_literal_oracle(self, rng):
        for _ in range(20):
            d = random_dataset(rng, n=25, p=2, num_groups=2)
            beta = rng.normal(size=3)
            lam = rng.uniform(0, 1.5, 2)
            expected = loop_penalized_loss(beta[:2].tolist(), beta[2], d, lam.tolist())
            assert penalized_loss(beta, d, PenaltyWeights(lam)) == pytest.approx(expected, abs=1e-12 * max(1, abs(expected)))

    def test_zero_positive_group_raises(self):
        d = Dataset(np.zeros((3, 1)), [1, 0, 1], [[0], [1], [0]], [1, 0, 1], ("g",), ("x",))
        with pytest.raises(UndefinedRateError, match="group 'g'"):
            penalized_loss(np.zeros(2), d, PenaltyWeights(np.array([0.5])))

    def test_convexity_along_segments(self, rng):
        # sampled chord check of the convexity claim for moderate penalties
        for _ in range(20):
            d = random_dataset(rng, n=30, p=3, num_groups=2)
            lam = PenaltyWeights(rng.uniform(0, 1, 2))
            b0, b1 = rng.normal(size=4), rng.normal(size=4)
            f0 = penalized_loss(b0, d, lam)
            f1 = penalized_loss(b1, d, lam)
            for t in (0.25, 0.5, 0.75):
                chord = (1 - t) * f0 + t * f1
                assert penalized_loss((1 - t) * b0 + t * b1, d, lam) <= chord + 1e-9


class TestPenalizedGradient:
    def test_zero_lambda_is_logistic_gradient(self, rng):
        d = random_dataset(rng, n=35, p=3, num_groups=2)
        beta = rng.normal(size=4)
        design = np.column_stack([d.features, np.ones(d.n)])
        p = 1.0 / (1.0 + np.exp(-(design @ beta)))
        expected = design.T @ (p - d.outcomes)
        np.testing.assert_allclose(penalized_gradient(beta, d, PenaltyWeights.zeros(2)), expected, atol=1e-12)

    def test_matches_finite_differences(self, rng):
        for _ in range(10):
            d = random_dataset(rng, n=50, p=4, num_groups=2)
            beta = rng.normal(size=5)
            lam = PenaltyWeights(rng.uniform(0, 1, 2))
            analytic = penalized_gradient(beta, d, lam)
            numeric = central_difference_gradient(lambda b: penalized_loss(np.asarray(b), d, lam), beta.tolist())
            for a, b in zip(analytic, numeric):
                assert abs(a - b) < 1e-5 * max(1.0, abs(a), abs(b))

    def test_stationary_at_unpenalized_optimum(self, rng):
        d = logistic_dataset(rng, 300, np.array([0.5, -0.5]), 0.2)
        cfg = SolverConfig()
        model = fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n), cfg)
        beta = np.append(model.coefficients, model.intercept)
        grad = penalized_gradient(beta, d, PenaltyWeights.zeros(2))
        # solver tolerance applies to the mean-scaled gradient
        assert np.max(np.abs(grad)) <= cfg.gradient_tolerance * d.n


class TestFitPenalizedDirect:
    def test_zero_lambda_matches_weighted_fit(self, rng):
        d = random_dataset(rng, n=300, p=3, num_groups=2)
        direct = fit_penalized_direct(d, PenaltyWeights.zeros(2))
        weighted = fit_weighted_logistic(d.features, d.outcomes, np.ones(d.n))
        np.testing.assert_allclose(
            np.append(direct.coefficients, direct.intercept),
            np.append(weighted.coefficients, weighted.intercept),
            atol=1e-6,
        )

    def test_larger_lambda_weakly_reduces_soft_gap(self, rng):
        d = random_dataset(rng, n=600, p=3, num_groups=2)
        gaps = []
        for lam in (0.0, 0.5, 2.0):
            model = fit_penalized_direct(d, PenaltyWeights(np.array([lam, 0.0])))
            probs = model.predict_proba(d.features)
            gaps.append(tpr_gap_soft(d.outcomes, probs, 0, d))
        assert gaps[1] <= gaps[0] + 1e-9
        assert gaps[2] <= gaps[1] + 1e-9

    def test_minimizes_loss_at_least_as_well_as_perturbations(self, rng):
        d = random_dataset(rng, n=200, p=2, num_groups=2)
        lam = PenaltyWeights(np.array([0.4, 0.8]))
        model = fit_penalized_direct(d, lam)
        beta = np.append(model.coefficients, model.intercept)
        best = penalized_loss(beta, d, lam)
        for _ in range(20):
            assert best <= penalized_loss(beta + rng.normal(scale=0.05, size=beta.size), d, lam) + 1e-9


class TestPenaltyRowMultipliers:
    def test_signs_and_magnitudes(self):
        # one group of 2 (1 positive), reference of 2 (2 positives)
        d = Dataset(
            np.zeros((4, 1)),
            [1, 0, 1, 1],
            [[1], [1], [0], [0]],
            [0, 0, 1, 1],
            ("g",),
            ("x",),
        )
        s = penalty_row_multipliers(d, PenaltyWeights(np.array([0.5])))
        # group rows: -lambda * n_g / group positives = -0.5 * 2 / 1 = -1
        assert s[0] == pytest.approx(-1.0)
        assert s[1] == pytest.approx(-1.0)
        # reference rows: +lambda * n_g / reference positives = 0.5 * 2 / 2 = 0.5
        assert s[2] == pytest.approx(0.5)
        assert s[3] == pytest.approx(0.5)

    def test_overlapping_memberships_accumulate(self):
        d = Dataset(
            np.zeros((3, 1)),
            [1, 1, 1],
            [[1, 1], [1, 0], [0, 0]],
            [0, 0, 1],
            ("ga", "gb"),
            ("x",),
        )
        s = penalty_row_multipliers(d, PenaltyWeights(np.array([1.0, 1.0])))
        # row 0 in both groups: -(2/2) - (1/1) = -2; row 1 only in ga: -1
        assert s[0] == pytest.approx(-2.0)
        assert s[1] == pytest.approx(-1.0)
        # reference: (1*2 + 1*1) / 1 positive = 3
        assert s[2] == pytest.approx(3.0)

    def test_wrong_length_rejected(self, rng):
        d = random_dataset(rng, n=20, p=1, num_groups=2)
        with pytest.raises(ValueError, match="expected 2 penalty weights"):
            penalty_row_multipliers(d, PenaltyWeights(np.array([0.1])))
