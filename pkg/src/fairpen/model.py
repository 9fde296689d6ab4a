"""Logistic models: weighted maximum-likelihood fitting plus the direct
group-penalized objective and its analytic gradient.

The penalized objective adds, for each group g, a term

    lambda_g * n_g * (soft reference TPR - soft group TPR)

to the binary cross-entropy, where "soft TPR" averages predicted
probabilities over positive-outcome members. The penalty is linear in the
predicted probabilities, so each row contributes ``a_i * p_i`` with a
per-row constant ``a_i`` that depends only on group membership, outcome,
and the penalty weights (see :func:`penalty_row_multipliers`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .data import Dataset, compute_group_stats
from .metrics import UndefinedRateError, threshold_predictions

PROBABILITY_FLOOR = 1e-12  # clamp applied inside log terms only

_ARMIJO = 1e-4
_MIN_STEP = 2.0 ** -60


class ConvergenceError(RuntimeError):
    """The solver ran out of iterations or stalled before reaching tolerance."""

    def __init__(self, message: str, gradient_norm: float):
        super().__init__(f"{message} (gradient max-norm {gradient_norm:.3e})")
        self.gradient_norm = gradient_norm


class SeparationError(RuntimeError):
    """Coefficients diverged, the signature of (quasi-)separated data."""


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, stopping rule, and step policy.

    ``gradient_tolerance`` applies to the max-norm of the per-sample (mean)
    gradient, which keeps the stopping rule independent of sample size.
    ``step_rule`` is ``"newton"`` (default) or ``"gradient"``; both use
    backtracking line search and are fully deterministic. ``ridge`` adds an
    optional small L2 term on the non-intercept coefficients as an escape
    hatch for degenerate data; it defaults to 0 and is excluded from every
    reported objective value.
    """

    max_iterations: int = 10_000
    gradient_tolerance: float = 1e-8
    step_rule: str = "newton"
    ridge: float = 0.0
    max_coefficient: float = 1e4

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.step_rule not in ("newton", "gradient"):
            raise ValueError(f"unknown step_rule '{self.step_rule}'")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


@dataclass(frozen=True)
class PenaltyWeights:
    """One nonnegative penalty weight per group, in group order."""

    lambdas: np.ndarray

    def __post_init__(self) -> None:
        lam = np.array(self.lambdas, dtype=np.float64, copy=True)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a non-empty 1-D vector")
        if not np.isfinite(lam).all() or (lam < 0).any():
            raise ValueError("penalty weights must be finite and nonnegative")
        lam.flags.writeable = False
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def zeros(cls, num_groups: int) -> "PenaltyWeights":
        return cls(np.zeros(num_groups))

    def __len__(self) -> int:
        return self.lambdas.size


@dataclass(frozen=True)
class FittedModel:
    """Logistic coefficients, intercept, and the decision threshold to apply."""

    coefficients: np.ndarray
    intercept: float
    threshold: float
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        coef = np.array(self.coefficients, dtype=np.float64, copy=True)
        if coef.ndim != 1 or not np.isfinite(coef).all():
            raise ValueError("coefficients must be a finite 1-D vector")
        if not np.isfinite(self.intercept):
            raise ValueError("intercept must be finite")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly inside (0, 1)")
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def predict_proba(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.coefficients.size:
            raise ValueError(
                f"expected {self.coefficients.size} feature columns, got "
                f"{X.shape[1] if X.ndim == 2 else 'a non-matrix'}"
            )
        return expit(X @ self.coefficients + self.intercept)

    def predict(self, features) -> np.ndarray:
        return threshold_predictions(self.predict_proba(features), self.threshold)

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "intercept": float(self.intercept),
            "threshold": float(self.threshold),
            "feature_names": list(self.feature_names) if self.feature_names else None,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "FittedModel":
        return cls(
            coefficients=np.asarray(raw["coefficients"], dtype=np.float64),
            intercept=float(raw["intercept"]),
            threshold=float(raw["threshold"]),
            feature_names=tuple(raw["feature_names"]) if raw.get("feature_names") else None,
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "FittedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _augment(features: np.ndarray) -> np.ndarray:
    # intercept column last; beta layout is [coefficients..., intercept]
    return np.column_stack((features, np.ones(features.shape[0])))


def _nll_terms(probabilities: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    p = np.clip(probabilities, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)
    return -(outcomes * np.log(p) + (1.0 - outcomes) * np.log1p(-p))


def _as_weights(lambdas, num_groups: int) -> PenaltyWeights:
    weights = lambdas if isinstance(lambdas, PenaltyWeights) else PenaltyWeights(np.asarray(lambdas, dtype=np.float64))
    if len(weights) != num_groups:
        raise ValueError(f"expected {num_groups} penalty weights, got {len(weights)}")
    return weights


def penalty_row_multipliers(dataset: Dataset, lambdas) -> np.ndarray:
    """Per-row constant scaling each row's probability inside the penalty.

    Row i receives ``+sum_g lambda_g * n_g / ref_positives`` if it is in the
    reference group and ``-lambda_g * n_g / group_positives`` for every group
    g it belongs to (overlapping memberships accumulate). Only positive
    outcomes enter the penalty; callers multiply by Y.
    """
    weights = _as_weights(lambdas, dataset.num_groups)
    stats = compute_group_stats(dataset)
    zero = np.flatnonzero(stats.group_positive_counts == 0)
    if zero.size:
        raise UndefinedRateError(
            f"group '{dataset.group_names[zero[0]]}' has no positive outcomes; "
            "the penalty denominator is undefined"
        )
    if stats.reference_positive_count == 0:
        raise UndefinedRateError(
            "reference group has no positive outcomes; the penalty denominator is undefined"
        )
    lam = weights.lambdas
    sizes = stats.group_sizes.astype(np.float64)
    per_group = lam * sizes / stats.group_positive_counts.astype(np.float64)
    group_part = dataset.group_memberships.astype(np.float64) @ per_group
    reference_part = dataset.reference_membership.astype(np.float64) * (
        float(np.sum(lam * sizes)) / stats.reference_positive_count
    )
    return reference_part - group_part


def penalized_loss(beta, dataset: Dataset, lambdas) -> float:
    """Binary cross-entropy plus size-scaled soft TPR-gap penalties.

    ``beta`` stacks the feature coefficients with the intercept as the last
    entry. The penalty term is signed: a group whose soft TPR already exceeds
    the reference's contributes negatively.
    """
    beta = np.asarray(beta, dtype=np.float64)
    design = _augment(dataset.features)
    outcomes = dataset.outcomes.astype(np.float64)
    probabilities = expit(design @ beta)
    penalty_scale = outcomes * penalty_row_multipliers(dataset, lambdas)
    return float(np.sum(_nll_terms(probabilities, outcomes)) + penalty_scale @ probabilities)


def penalized_gradient(beta, dataset: Dataset, lambdas) -> np.ndarray:
    """Analytic gradient of :func:`penalized_loss` in ``beta``.

    Uses dp/dbeta = p (1 - p) x for every row, including the reference rows,
    so this is the exact derivative of the loss as implemented.
    """
    beta = np.asarray(beta, dtype=np.float64)
    design = _augment(dataset.features)
    outcomes = dataset.outcomes.astype(np.float64)
    probabilities = expit(design @ beta)
    penalty_scale = outcomes * penalty_row_multipliers(dataset, lambdas)
    residual = probabilities - outcomes + penalty_scale * probabilities * (1.0 - probabilities)
    return design.T @ residual


def _minimize(beta0: np.ndarray, value_fn, grad_fn, hessian_fn, cfg: SolverConfig) -> np.ndarray:
    """Backtracking descent with Newton or plain-gradient steps.

    ``value_fn(beta) -> (value, probabilities)``; ``grad_fn`` and
    ``hessian_fn`` take ``(beta, probabilities)`` so line-search trials never
    pay for a gradient. All three operate on the mean-scaled objective, which
    makes ``cfg.gradient_tolerance`` sample-size invariant.
    """
    beta = beta0
    value, probs = value_fn(beta)
    grad = grad_fn(beta, probs)
    for _ in range(cfg.max_iterations):
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= cfg.gradient_tolerance:
            return beta
        if np.max(np.abs(beta)) > cfg.max_coefficient:
            raise SeparationError(
                "coefficients diverged, suggesting (quasi-)separated data; "
                "add a small ridge term or review the inputs"
            )
        if cfg.step_rule == "newton":
            H = hessian_fn(beta, probs)
            try:
                step = np.linalg.solve(H, -grad)
            except np.linalg.LinAlgError:
                jitter = 1e-10 * (np.trace(H) / H.shape[0] + 1.0)
                step = np.linalg.solve(H + jitter * np.eye(H.shape[0]), -grad)
            if grad @ step >= 0.0:  # indefinite curvature; fall back to steepest descent
                step = -grad
        else:
            step = -grad
        slope = float(grad @ step)
        t = 1.0
        new_grad = None
        while True:
            candidate = beta + t * step
            new_value, new_probs = value_fn(candidate)
            if new_value <= value + _ARMIJO * t * slope:
                break
            if t == 1.0:
                # Near the optimum the Armijo decrease drops below the
                # objective's round-off noise; a full step that still
                # contracts the gradient is the quadratic-convergence phase.
                full_grad = grad_fn(candidate, new_probs)
                if float(np.max(np.abs(full_grad))) <= 0.9 * grad_norm:
                    new_grad = full_grad
                    break
            t *= 0.5
            if t < _MIN_STEP:
                raise ConvergenceError("line search stalled", grad_norm)
        beta, value, probs = candidate, new_value, new_probs
        grad = grad_fn(beta, probs) if new_grad is None else new_grad
    raise ConvergenceError(
        f"no convergence within {cfg.max_iterations} iterations", float(np.max(np.abs(grad)))
    )


def fit_weighted_logistic(
    features,
    outcomes,
    sample_weights,
    cfg: SolverConfig = SolverConfig(),
    *,
    feature_names: tuple[str, ...] | None = None,
    threshold: float = 0.5,
) -> FittedModel:
    """Fit logistic regression minimizing per-row weighted cross-entropy.

    Zero-weight rows are carried along but cannot influence the fit. Requires
    at least one positive-weight row of each label class. The intercept is
    always included and never regularized.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.float64)
    w = np.asarray(sample_weights, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],) or w.shape != y.shape:
        raise ValueError("features, outcomes, and sample_weights have mismatched shapes")
    if not np.isfinite(X).all():
        raise ValueError("features contain non-finite values")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("outcomes must be 0/1 valued")
    if not np.isfinite(w).all() or (w < 0).any():
        raise ValueError("sample weights must be finite and nonnegative")
    active = w > 0
    if not (y[active] == 1).any() or not (y[active] == 0).any():
        raise ValueError("need at least one positive-weight row of each label class")

    design = _augment(X)
    scale = 1.0 / X.shape[0]
    ridge_mask = np.ones(design.shape[1])
    ridge_mask[-1] = 0.0  # intercept unpenalized
    wy = w * y

    def value_fn(beta: np.ndarray):
        eta = design @ beta
        p = expit(eta)
        # exact weighted BCE from logits: sum w * (softplus(eta) - y * eta)
        value = scale * (float(w @ np.logaddexp(0.0, eta)) - float(wy @ eta))
        if cfg.ridge:
            value += 0.5 * cfg.ridge * scale * float(beta[:-1] @ beta[:-1])
        return value, p

    def grad_fn(beta: np.ndarray, p: np.ndarray) -> np.ndarray:
        grad = scale * (design.T @ (w * (p - y)))
        if cfg.ridge:
            grad += cfg.ridge * scale * (ridge_mask * beta)
        return grad

    def hessian_fn(beta: np.ndarray, p: np.ndarray) -> np.ndarray:
        curvature = scale * w * p * (1.0 - p)
        H = design.T @ (design * curvature[:, None])
        if cfg.ridge:
            H += cfg.ridge * scale * np.diag(ridge_mask)
        return H

    beta = _minimize(np.zeros(design.shape[1]), value_fn, grad_fn, hessian_fn, cfg)
    return FittedModel(beta[:-1], float(beta[-1]), threshold, feature_names)


def fit_penalized_direct(
    dataset: Dataset,
    lambdas,
    cfg: SolverConfig = SolverConfig(),
    *,
    threshold: float = 0.5,
) -> FittedModel:
    """Minimize the penalized loss directly by gradient-based descent.

    This is the reference solver used to validate the cost-sensitive
    reduction path; the reduction is the production path.
    """
    design = _augment(dataset.features)
    y = dataset.outcomes.astype(np.float64)
    penalty_scale = y * penalty_row_multipliers(dataset, lambdas)
    scale = 1.0 / dataset.n
    ridge_mask = np.ones(design.shape[1])
    ridge_mask[-1] = 0.0

    def value_fn(beta: np.ndarray):
        eta = design @ beta
        p = expit(eta)
        value = scale * (
            float(np.sum(np.logaddexp(0.0, eta))) - float(y @ eta) + float(penalty_scale @ p)
        )
        if cfg.ridge:
            value += 0.5 * cfg.ridge * scale * float(beta[:-1] @ beta[:-1])
        return value, p

    def grad_fn(beta: np.ndarray, p: np.ndarray) -> np.ndarray:
        residual = p - y + penalty_scale * p * (1.0 - p)
        grad = scale * (design.T @ residual)
        if cfg.ridge:
            grad += cfg.ridge * scale * (ridge_mask * beta)
        return grad

    def hessian_fn(beta: np.ndarray, p: np.ndarray) -> np.ndarray:
        pq = p * (1.0 - p)
        curvature = scale * (pq + penalty_scale * pq * (1.0 - 2.0 * p))
        H = design.T @ (design * curvature[:, None])
        if cfg.ridge:
            H += cfg.ridge * scale * np.diag(ridge_mask)
        return H

    beta = _minimize(np.zeros(design.shape[1]), value_fn, grad_fn, hessian_fn, cfg)
    return FittedModel(beta[:-1], float(beta[-1]), threshold, dataset.feature_names)
