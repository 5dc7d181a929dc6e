"""Clustering evaluation: optimal cluster-to-class matching, accuracy, NMI, ARI."""

import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import xlogy

from .errors import DegeneratePartitionWarning, LengthMismatchError, NonSquareError


def confusion_matrix(pred, true, K=None):
    """(K, K) integer counts indexed [cluster, class]."""
    pred = np.asarray(pred, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise LengthMismatchError(f"pred {pred.shape} vs true {true.shape}")
    if K is None:
        K = int(max(pred.max(), true.max())) + 1
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (pred, true), 1)
    return cm


def hungarian_match(cm):
    """Permutation pi maximizing sum_k cm[k, pi[k]] via linear assignment."""
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise NonSquareError(f"confusion matrix must be square, got {cm.shape}")
    rows, cols = linear_sum_assignment(cm, maximize=True)
    perm = np.empty(cm.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def clustering_accuracy(pred, true):
    """Fraction of points correct under the best one-to-one cluster relabeling."""
    cm = confusion_matrix(pred, true)
    perm = hungarian_match(cm)
    return float(cm[np.arange(cm.shape[0]), perm].sum() / cm.sum())


def _partition_entropy(counts, M):
    p = counts / M
    return float(-xlogy(p, p).sum())


def nmi(pred, true):
    """Normalized mutual information I(C;T)/sqrt(H(C) H(T)).

    Degenerate partitions (a single cluster on either side) have a zero
    denominator; returns 0 with a DegeneratePartitionWarning.
    """
    cm = confusion_matrix(pred, true)
    M = cm.sum()
    row = cm.sum(axis=1)
    col = cm.sum(axis=0)
    h_c = _partition_entropy(row, M)
    h_t = _partition_entropy(col, M)
    if h_c == 0.0 or h_t == 0.0:
        warnings.warn("degenerate partition: NMI undefined, returning 0",
                      DegeneratePartitionWarning)
        return 0.0
    joint = cm / M
    outer = np.outer(row, col) / (M * M)
    nz = joint > 0
    mi = float((joint[nz] * (np.log(joint[nz]) - np.log(outer[nz]))).sum())
    return mi / np.sqrt(h_c * h_t)


def ari(pred, true):
    """Adjusted Rand index with the expected-index correction."""
    cm = confusion_matrix(pred, true)
    n = cm.sum()

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(cm).sum()
    sum_rows = comb2(cm.sum(axis=1)).sum()
    sum_cols = comb2(cm.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        # both partitions degenerate in the same way; identical by convention
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
