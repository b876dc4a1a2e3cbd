"""Clustering and classification agreement metrics from contingency tables.

ARI uses exact integer pair counts up to the final division (Python ints, so
no overflow at any realistic n); entropies for the V-measure family are in
nats.  Degenerate conventions: ARI is 1.0 when both partitions are trivial,
homogeneity is 1 when the class entropy is 0, completeness is 1 when the
cluster entropy is 0, and V is 0 when homogeneity + completeness is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContingencyTable:
    """Joint label counts with marginals: counts[i][j] = |true==i & pred==j|."""

    counts: np.ndarray  # K_true x K_pred, non-negative ints
    row_sums: np.ndarray
    col_sums: np.ndarray
    n: int


def contingency(true_labels, pred_labels) -> ContingencyTable:
    true_labels = np.asarray(true_labels)
    pred_labels = np.asarray(pred_labels)
    if true_labels.shape != pred_labels.shape or true_labels.ndim != 1:
        raise ValueError("label arrays must be 1-D and the same length")
    if true_labels.size < 1:
        raise ValueError("need at least one sample")
    _, ti = np.unique(true_labels, return_inverse=True)
    _, pi = np.unique(pred_labels, return_inverse=True)
    k_true = int(ti.max()) + 1
    k_pred = int(pi.max()) + 1
    counts = np.zeros((k_true, k_pred), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return ContingencyTable(
        counts=counts,
        row_sums=counts.sum(axis=1),
        col_sums=counts.sum(axis=0),
        n=int(true_labels.size),
    )


def _comb2(x: int) -> int:
    return x * (x - 1) // 2


def ari(ct: ContingencyTable) -> float:
    """Adjusted Rand Index: pair-count agreement corrected for chance."""
    if ct.n < 2:
        raise ValueError("ARI needs at least 2 samples")
    index = sum(_comb2(int(v)) for v in ct.counts.ravel())
    sum_a = sum(_comb2(int(v)) for v in ct.row_sums)
    sum_b = sum(_comb2(int(v)) for v in ct.col_sums)
    pairs = _comb2(ct.n)
    # ARI = (index - sum_a*sum_b/pairs) / ((sum_a+sum_b)/2 - sum_a*sum_b/pairs),
    # scaled through by 2*pairs to stay in exact integers.
    numer = 2 * (index * pairs - sum_a * sum_b)
    denom = (sum_a + sum_b) * pairs - 2 * sum_a * sum_b
    if denom == 0:
        return 1.0
    return numer / denom


def _entropy(counts: np.ndarray, n: int) -> float:
    h = 0.0
    for v in counts:
        v = int(v)
        if v > 0:
            p = v / n
            h -= p * math.log(p)
    return h


def v_measure(ct: ContingencyTable) -> tuple[float, float, float]:
    """Return (homogeneity, completeness, V) of pred clusters vs true classes."""
    if ct.n < 1:
        raise ValueError("V-measure needs at least 1 sample")
    n = ct.n
    h_true = _entropy(ct.row_sums, n)
    h_pred = _entropy(ct.col_sums, n)
    h_true_given_pred = 0.0
    h_pred_given_true = 0.0
    k_true, k_pred = ct.counts.shape
    for i in range(k_true):
        for j in range(k_pred):
            v = int(ct.counts[i, j])
            if v == 0:
                continue
            p = v / n
            h_true_given_pred -= p * math.log(v / int(ct.col_sums[j]))
            h_pred_given_true -= p * math.log(v / int(ct.row_sums[i]))
    homogeneity = 1.0 if h_true == 0.0 else 1.0 - h_true_given_pred / h_true
    completeness = 1.0 if h_pred == 0.0 else 1.0 - h_pred_given_true / h_pred
    if homogeneity + completeness == 0.0:
        v = 0.0
    else:
        v = 2.0 * homogeneity * completeness / (homogeneity + completeness)
    return homogeneity, completeness, v


def accuracy(true_labels, pred_labels) -> float:
    """Fraction of exact label matches."""
    true_labels = np.asarray(true_labels)
    pred_labels = np.asarray(pred_labels)
    if true_labels.shape != pred_labels.shape or true_labels.ndim != 1:
        raise ValueError("label arrays must be 1-D and the same length")
    if true_labels.size < 1:
        raise ValueError("need at least one sample")
    return float(np.mean(true_labels == pred_labels))
