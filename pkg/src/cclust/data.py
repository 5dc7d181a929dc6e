"""Synthetic mixtures, CSV feature ingestion, and result serialization.

All randomness flows through numpy's PCG64 generator (np.random.default_rng),
so datasets are byte-identical across platforms for a fixed seed. Feature
files are plain CSV with header f0..f{N-1} and an optional trailing integer
"label" column. Result tables are CSV with floats printed at 17 significant
digits, which round-trips float64 losslessly.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParamsError, NonFiniteInputError, ParseError, RaggedRowsError


@dataclass(eq=False)
class Dataset:
    X: np.ndarray              # (M, N)
    labels: np.ndarray | None  # (M,) int class indices, or None
    K: int | None              # class count; None when unknown

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.K is not None and (self.labels.min() < 0 or self.labels.max() >= self.K):
                raise InvalidParamsError("labels out of [0, K)")

    @property
    def M(self):
        return self.X.shape[0]

    @property
    def N(self):
        return self.X.shape[1]


def make_gaussian_mixture(K, N, per_class, separation, seed=0):
    """K isotropic unit-variance Gaussian blobs with per_class points each.

    Component means all have norm `separation` and are mutually equidistant
    when N >= K (scaled coordinate axes); in lower dimension they fall back
    to seeded random directions of the same norm. Rows are shuffled so class
    order carries no information.
    """
    if K < 2 or N < 1 or per_class < 1 or not separation > 0:
        raise InvalidParamsError(
            f"need K >= 2, N >= 1, per_class >= 1, separation > 0; "
            f"got K={K}, N={N}, per_class={per_class}, separation={separation}")
    rng = np.random.default_rng(seed)
    if N >= K:
        means = np.zeros((K, N))
        means[np.arange(K), np.arange(K)] = separation
    else:
        dirs = rng.standard_normal((K, N))
        means = separation * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    labels = np.repeat(np.arange(K), per_class)
    X = means[labels] + rng.standard_normal((K * per_class, N))
    order = rng.permutation(K * per_class)
    return Dataset(X=X[order], labels=labels[order], K=K)


def load_features_csv(path):
    """Parse a feature CSV; errors carry 1-based row/column locations."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, 1, "empty file") from None
        has_label = header and header[-1].strip() == "label"
        n_features = len(header) - (1 if has_label else 0)
        if n_features < 1:
            raise ParseError(1, 1, "no feature columns in header")

        rows, labels = [], []
        for r, fields in enumerate(reader, start=2):
            if len(fields) != len(header):
                raise RaggedRowsError(r, len(header), len(fields))
            vals = np.empty(n_features)
            for c in range(n_features):
                try:
                    vals[c] = float(fields[c])
                except ValueError:
                    raise ParseError(r, c + 1, f"not a number: {fields[c]!r}") from None
                if not np.isfinite(vals[c]):
                    raise ParseError(r, c + 1, f"non-finite value: {fields[c]!r}")
            rows.append(vals)
            if has_label:
                try:
                    labels.append(int(fields[-1]))
                except ValueError:
                    raise ParseError(r, len(header), f"bad label: {fields[-1]!r}") from None

    if not rows:
        raise ParseError(2, 1, "no data rows")
    X = np.vstack(rows)
    if has_label:
        lab = np.asarray(labels, dtype=np.int64)
        if lab.min() < 0:
            raise ParseError(2, len(header), "negative label")
        return Dataset(X=X, labels=lab, K=int(lab.max()) + 1)
    return Dataset(X=X, labels=None, K=None)


def save_features_csv(path, dataset):
    header = [f"f{j}" for j in range(dataset.N)]
    if dataset.labels is not None:
        header.append("label")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(dataset.M):
            row = [_fmt(v) for v in dataset.X[i]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            w.writerow(row)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def save_results(path, rows, fieldnames=None):
    """Write a list of dict rows as CSV; floats at 17 significant digits."""
    if not rows:
        raise NonFiniteInputError("no rows to save")
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row[k]) for k in fieldnames})


def load_results(path):
    """Read back a results CSV as a list of dicts (numbers parsed when possible)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = int(v)
                except (ValueError, TypeError):
                    try:
                        parsed[k] = float(v)
                    except (ValueError, TypeError):
                        parsed[k] = v
            out.append(parsed)
    return out
