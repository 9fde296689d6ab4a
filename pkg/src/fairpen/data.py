"""Dataset container, CSV ingestion, and structural validation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

COMPLEMENT_REFERENCE = "complement"


class DataValidationError(ValueError):
    """A file or array violates the dataset contract."""


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    ok = np.isin(arr, (0.0, 1.0))
    if not ok.all():
        bad = np.argwhere(~ok)[0]
        where = f"row {bad[0]}" if bad.size == 1 else f"row {bad[0]}, column {bad[1]}"
        raise DataValidationError(f"non-binary value in {name} ({where})")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class DataSchema:
    """Column roles binding a CSV file to a :class:`Dataset`.

    ``reference`` is either the name of an explicit 0/1 indicator column or
    the literal string ``"complement"``, in which case the reference group is
    every row that belongs to none of the penalized groups.
    """

    outcome: str
    features: tuple[str, ...]
    groups: tuple[str, ...]
    reference: str = COMPLEMENT_REFERENCE

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "groups", tuple(self.groups))
        if not self.features:
            raise DataValidationError("schema needs at least one feature column")
        if not self.groups:
            raise DataValidationError("schema needs at least one group indicator column")

    @property
    def complement_mode(self) -> bool:
        return self.reference == COMPLEMENT_REFERENCE


@dataclass(frozen=True)
class Dataset:
    """Immutable sample of covariates, binary outcomes, and group indicators.

    A row may belong to several penalized groups at once; the reference group
    is disjoint from every penalized group.
    """

    features: np.ndarray
    outcomes: np.ndarray
    group_memberships: np.ndarray
    reference_membership: np.ndarray
    group_names: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64, copy=True)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise DataValidationError("features must be a non-empty 2-D matrix")
        if not np.isfinite(features).all():
            raise DataValidationError("features contain non-finite or missing values")
        n = features.shape[0]

        outcomes = _as_binary(self.outcomes, "outcomes")
        if outcomes.shape != (n,):
            raise DataValidationError("outcomes length does not match feature rows")

        groups = _as_binary(self.group_memberships, "group_memberships")
        if groups.ndim != 2 or groups.shape[0] != n or groups.shape[1] < 1:
            raise DataValidationError("group_memberships must be an n-by-groups 0/1 matrix")

        reference = _as_binary(self.reference_membership, "reference_membership")
        if reference.shape != (n,):
            raise DataValidationError("reference_membership length does not match feature rows")

        overlap = np.flatnonzero((reference == 1) & (groups.max(axis=1) == 1))
        if overlap.size:
            raise DataValidationError(
                f"reference overlaps group in row {overlap[0]}; the reference group "
                "must be disjoint from every penalized group"
            )

        group_names = tuple(str(g) for g in self.group_names)
        feature_names = tuple(str(f) for f in self.feature_names)
        if len(group_names) != groups.shape[1]:
            raise DataValidationError("group_names length does not match group columns")
        if len(feature_names) != features.shape[1]:
            raise DataValidationError("feature_names length does not match feature columns")

        for arr in (features, outcomes, groups, reference):
            arr.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "group_memberships", groups)
        object.__setattr__(self, "reference_membership", reference)
        object.__setattr__(self, "group_names", group_names)
        object.__setattr__(self, "feature_names", feature_names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_groups(self) -> int:
        return self.group_memberships.shape[1]

    def subset(self, indices) -> "Dataset":
        """New Dataset holding only the given rows (fold splits, bootstraps)."""
        idx = np.asarray(indices)
        return Dataset(
            self.features[idx],
            self.outcomes[idx],
            self.group_memberships[idx],
            self.reference_membership[idx],
            self.group_names,
            self.feature_names,
        )

    def without_features(self, names: Sequence[str]) -> "Dataset":
        """Drop named feature columns (misspecification experiments)."""
        drop = set(names)
        unknown = drop - set(self.feature_names)
        if unknown:
            raise DataValidationError(f"unknown feature column(s): {', '.join(sorted(unknown))}")
        keep = [i for i, f in enumerate(self.feature_names) if f not in drop]
        if not keep:
            raise DataValidationError("cannot drop every feature column")
        return Dataset(
            self.features[:, keep],
            self.outcomes,
            self.group_memberships,
            self.reference_membership,
            self.group_names,
            tuple(self.feature_names[i] for i in keep),
        )


@dataclass(frozen=True)
class GroupStats:
    """Group sizes and positive-outcome counts used as penalty denominators."""

    group_sizes: np.ndarray
    group_positive_counts: np.ndarray
    reference_positive_count: int


def compute_group_stats(dataset: Dataset) -> GroupStats:
    """Count members and positive outcomes per group and in the reference."""
    memberships = dataset.group_memberships.astype(np.int64)
    outcomes = dataset.outcomes.astype(np.int64)
    sizes = memberships.sum(axis=0)
    positives = memberships.T @ outcomes
    reference_positives = int(outcomes[dataset.reference_membership == 1].sum())
    for arr in (sizes, positives):
        arr.flags.writeable = False
    return GroupStats(sizes, positives, reference_positives)


def _numeric_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DataValidationError(
            f"non-numeric or missing value in feature column '{column}' (row {bad[0]})"
        )
    return values


def _binary_column(frame: pd.DataFrame, column: str, role: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    ok = np.isin(values, (0.0, 1.0))
    if not ok.all():
        bad = np.flatnonzero(~ok)[0]
        raise DataValidationError(
            f"non-binary {role} value in column '{column}' (row {bad}); expected 0 or 1"
        )
    return values.astype(np.int8)


def load_csv(path, schema: DataSchema) -> Dataset:
    """Read a header-first CSV file into a validated :class:`Dataset`.

    Binary columns (outcome, group indicators, explicit reference) must hold
    0/1 values; feature columns must be finite numbers. Missing values are
    rejected, not imputed. In complement mode the reference indicator is
    derived as 1 for every row with all group indicators 0.
    """
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"no such file: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise DataValidationError(f"empty file: {path}") from None
    if frame.empty:
        raise DataValidationError(f"{path} has a header but no data rows")

    needed = [schema.outcome, *schema.features, *schema.groups]
    if not schema.complement_mode:
        needed.append(schema.reference)
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise DataValidationError(f"missing column(s): {', '.join(missing)}")

    features = np.column_stack([_numeric_column(frame, c) for c in schema.features])
    outcomes = _binary_column(frame, schema.outcome, "outcome")
    groups = np.column_stack([_binary_column(frame, c, "group indicator") for c in schema.groups])
    if schema.complement_mode:
        reference = (groups.max(axis=1) == 0).astype(np.int8)
    else:
        reference = _binary_column(frame, schema.reference, "reference indicator")
        overlap = np.flatnonzero((reference == 1) & (groups.max(axis=1) == 1))
        if overlap.size:
            raise DataValidationError(
                f"reference overlaps group in row {overlap[0]} of {path}"
            )
    return Dataset(features, outcomes, groups, reference, schema.groups, schema.features)


def save_csv(dataset: Dataset, path, outcome: str = "outcome", reference: str = "reference") -> DataSchema:
    """Write the dataset to CSV and return the schema that reloads it."""
    frame = pd.DataFrame({name: dataset.features[:, i] for i, name in enumerate(dataset.feature_names)})
    frame[outcome] = dataset.outcomes
    for i, name in enumerate(dataset.group_names):
        frame[name] = dataset.group_memberships[:, i]
    frame[reference] = dataset.reference_membership
    frame.to_csv(path, index=False, float_format="%.17g")  # exact float64 round-trip
    return DataSchema(
        outcome=outcome,
        features=dataset.feature_names,
        groups=dataset.group_names,
        reference=reference,
    )
