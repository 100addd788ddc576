"""Dataset ingestion and preparation: CSV loading, label merging, quantile
discretization of continuous responses, and seeded train/test splits.

CSV is the single interchange format: a header row names the predictor
columns, one column holds the label.  Raw label values may be anything
hashable; classes are indexed 1..m by ascending value.
"""

from __future__ import annotations

import csv

import numpy as np

from .data import LabeledDataset
from .errors import DataError, ParameterError
from .families import categorical, ordinal

__all__ = ["load_csv", "merge_labels", "discretize_quantiles", "split"]


def _sort_key(values):
    """Distinct raw labels sorted numerically when possible, else as text."""
    try:
        return sorted(values, key=float)
    except (TypeError, ValueError):
        return sorted(values, key=str)


def load_csv(path, label_column: str, is_ordinal: bool = False) -> LabeledDataset:
    """Read a headed CSV into a dataset, mapping labels to 1..m.

    Classes are numbered by ascending sort of the distinct raw label
    values (numeric sort when every value parses as a number).  All other
    columns must be numeric predictors.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        if label_column not in header:
            raise DataError(
                f"{path}: no column {label_column!r}; available: {', '.join(header)}"
            )
        label_idx = header.index(label_column)
        predictor_names = [nm for i, nm in enumerate(header) if i != label_idx]
        rows = []
        raw_labels = []
        for row_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {row_number} has {len(row)} cells, expected {len(header)}"
                )
            values = []
            for i, cell in enumerate(row):
                if i == label_idx:
                    raw_labels.append(cell.strip())
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {row_number}, column {header[i]!r}: "
                        f"non-numeric value {cell.strip()!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    distinct = _sort_key(set(raw_labels))
    if len(distinct) < 2:
        raise DataError(
            f"{path}: label column {label_column!r} has a single distinct value"
        )
    index = {raw: i + 1 for i, raw in enumerate(distinct)}
    labels = np.array([index[raw] for raw in raw_labels], dtype=np.int64)
    family = ordinal(len(distinct)) if is_ordinal else categorical(len(distinct))
    return LabeledDataset(
        X=np.asarray(rows, dtype=float),
        labels=labels,
        family=family,
        column_names=tuple(predictor_names),
    )


def merge_labels(data: LabeledDataset, groups) -> LabeledDataset:
    """Coarsen classes: groups[g] lists the current class ids that become
    class g+1.  Groups must cover every class exactly once."""
    mapping = {}
    for g, members in enumerate(groups, start=1):
        members = (members,) if np.isscalar(members) else tuple(members)
        for label in members:
            label = int(label)
            if label in mapping:
                raise ParameterError(f"class {label} appears in two groups")
            mapping[label] = g
    missing = [l for l in range(1, data.m + 1) if l not in mapping]
    if missing:
        raise ParameterError(f"groups do not cover classes {missing}")
    extra = [l for l in mapping if not 1 <= l <= data.m]
    if extra:
        raise ParameterError(f"groups name unknown classes {sorted(extra)}")
    labels = np.array([mapping[int(l)] for l in data.labels], dtype=np.int64)
    m = len(groups)
    family = ordinal(m) if data.family.is_ordinal else categorical(m)
    return LabeledDataset(
        X=data.X, labels=labels, family=family, column_names=data.column_names
    )


def discretize_quantiles(values, bins: int) -> np.ndarray:
    """Ordinal labels 1..bins with cut points at the j/bins quantiles.

    Values equal to a cut point go to the lower bin."""
    values = np.asarray(values, dtype=float)
    if bins < 2:
        raise ParameterError(f"bins={bins} must be >= 2")
    if values.ndim != 1:
        raise ParameterError("values must be a vector")
    if values.size < bins:
        raise DataError(f"{values.size} values cannot fill {bins} bins")
    if np.unique(values).size < bins:
        raise DataError(
            f"only {np.unique(values).size} distinct values for {bins} bins"
        )
    cuts = np.quantile(values, np.arange(1, bins) / bins)
    return (np.searchsorted(cuts, values, side="left") + 1).astype(np.int64)


def split(data: LabeledDataset, train_fraction: float, stratified: bool = True,
          seed=None):
    """Seeded split into (train, test), optionally stratified by class."""
    if not 0 < train_fraction < 1:
        raise ParameterError(
            f"train_fraction={train_fraction} must be strictly between 0 and 1"
        )
    rng = np.random.default_rng(seed)
    n = data.n
    take = np.zeros(n, dtype=bool)
    if stratified:
        for l in range(1, data.m + 1):
            idx = np.flatnonzero(data.labels == l)
            if idx.size < 2:
                raise DataError(
                    f"class {l} has {idx.size} observation(s); cannot stratify"
                )
            rng.shuffle(idx)
            # every class keeps at least one point on each side
            n_tr = int(np.clip(round(train_fraction * idx.size), 1, idx.size - 1))
            take[idx[:n_tr]] = True
    else:
        idx = rng.permutation(n)
        n_tr = int(np.clip(round(train_fraction * n), 1, n - 1))
        take[idx[:n_tr]] = True
    return data.subset(take), data.subset(~take)
