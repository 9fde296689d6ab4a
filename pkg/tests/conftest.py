import numpy as np
import pytest

from fairpen.data import Dataset


def random_dataset(rng, n=30, p=3, num_groups=2, ensure_positives=True) -> Dataset:
    """Random dataset with overlapping groups and a complement reference.

    With ensure_positives, redraws until every group and the reference hold
    at least one positive outcome (the penalty denominators exist).
    """
    for _ in range(200):
        features = rng.normal(size=(n, p))
        outcomes = rng.integers(0, 2, size=n)
        groups = (rng.random(size=(n, num_groups)) < 0.35).astype(int)
        reference = (groups.max(axis=1) == 0).astype(int)
        if reference.sum() == 0:
            continue
        d = Dataset(
            features,
            outcomes,
            groups,
            reference,
            tuple(f"g{i}" for i in range(num_groups)),
            tuple(f"f{i}" for i in range(p)),
        )
        if not ensure_positives:
            return d
        ok = outcomes[reference == 1].sum() > 0 and all(
            outcomes[groups[:, g] == 1].sum() > 0 for g in range(num_groups)
        )
        if ok:
            return d
    raise AssertionError("could not draw a dataset satisfying the positive-count preconditions")


def logistic_dataset(rng, n, beta, intercept, num_groups=2) -> Dataset:
    """Dataset whose outcomes follow a known logistic model on N(0,1) features."""
    p = len(beta)
    for _ in range(200):
        features = rng.normal(size=(n, p))
        probs = 1.0 / (1.0 + np.exp(-(features @ beta + intercept)))
        outcomes = (rng.random(n) < probs).astype(int)
        groups = (rng.random(size=(n, num_groups)) < 0.3).astype(int)
        reference = (groups.max(axis=1) == 0).astype(int)
        if reference.sum() == 0 or outcomes[reference == 1].sum() == 0:
            continue
        if any(outcomes[groups[:, g] == 1].sum() == 0 for g in range(num_groups)):
            continue
        return Dataset(
            features,
            outcomes,
            groups,
            reference,
            tuple(f"g{i}" for i in range(num_groups)),
            tuple(f"f{i}" for i in range(p)),
        )
    raise AssertionError("could not draw a logistic dataset with the required positives")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
