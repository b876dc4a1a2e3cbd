"""Clustering agreement metrics checked against independent oracles.

The oracles deliberately avoid the contingency-table shortcuts used by the
implementation: ARI is recomputed by enumerating all point pairs, V-measure
by summing entropies directly over label groups.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest

from formbench.metrics import accuracy, ari, contingency, v_measure


def ari_by_pair_enumeration(a: np.ndarray, b: np.ndarray) -> float:
    """Rand-index bookkeeping over every point pair, adjusted for chance."""
    n00 = n01 = n10 = n11 = 0
    for i, j in combinations(range(len(a)), 2):
        same_a = a[i] == a[j]
        same_b = b[i] == b[j]
        if same_a and same_b:
            n11 += 1
        elif same_a:
            n10 += 1
        elif same_b:
            n01 += 1
        else:
            n00 += 1
    denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if denom == 0:
        return 1.0
    return 2.0 * (n00 * n11 - n01 * n10) / denom


def v_by_direct_entropy(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """Homogeneity/completeness/V from entropies computed over raw groups."""
    n = len(a)

    def entropy(labels) -> float:
        h = 0.0
        for value in set(labels):
            p = sum(1 for x in labels if x == value) / n
            h -= p * math.log(p)
        return h

    def conditional(target, given) -> float:
        h = 0.0
        for g in set(given):
            members = [t for t, x in zip(target, given) if x == g]
            for value in set(members):
                joint = sum(1 for x in members if x == value) / n
                h -= joint * math.log(joint / (len(members) / n))
        return h

    h_c = entropy(a)
    h_k = entropy(b)
    homogeneity = 1.0 if h_c == 0 else 1.0 - conditional(a, b) / h_c
    completeness = 1.0 if h_k == 0 else 1.0 - conditional(b, a) / h_k
    if homogeneity + completeness == 0:
        v = 0.0
    else:
        v = 2.0 * homogeneity * completeness / (homogeneity + completeness)
    return homogeneity, completeness, v


def test_ari_perfect_agreement():
    labels = np.array([0, 0, 1, 1, 2, 2])
    assert ari(contingency(labels, labels)) == 1.0
    relabeled = np.array([2, 2, 0, 0, 1, 1])  # same partition, renamed
    assert ari(contingency(labels, relabeled)) == 1.0


def test_ari_known_split_value():
    # one point of the second class defects; by hand this comes to 12/37
    truth = np.array([0, 0, 0, 1, 1, 1])
    pred = np.array([0, 0, 0, 1, 1, 0])
    expected = ari_by_pair_enumeration(truth, pred)
    got = ari(contingency(truth, pred))
    assert got == pytest.approx(expected, abs=1e-15)
    assert got == pytest.approx(12.0 / 37.0, abs=1e-15)


def test_ari_single_cluster_degenerate():
    # both sides all-one-cluster: denominator 0, defined as perfect agreement
    labels = np.zeros(5, dtype=int)
    assert ari(contingency(labels, labels)) == 1.0


def test_ari_rejects_tiny_input():
    with pytest.raises(ValueError):
        ari(contingency(np.array([0]), np.array([0])))


def test_v_measure_perfect_and_degenerate():
    labels = np.array([0, 0, 1, 1])
    h, c, v = v_measure(contingency(labels, labels))
    assert (h, c, v) == (1.0, 1.0, 1.0)

    # single true class: homogeneity is 1 by convention
    h, c, v = v_measure(contingency(np.zeros(4, dtype=int), np.array([0, 1, 0, 1])))
    assert h == 1.0
    assert c < 1.0

    # single predicted cluster: completeness is 1 by convention
    h, c, v = v_measure(contingency(np.array([0, 1, 0, 1]), np.zeros(4, dtype=int)))
    assert c == 1.0
    assert h == 0.0
    assert v == 0.0


def test_metrics_match_oracles_on_random_partitions():
    rng = np.random.default_rng(1234)
    for trial in range(200):
        n = int(rng.integers(2, 40))
        a = rng.integers(0, int(rng.integers(1, 6)), size=n)
        b = rng.integers(0, int(rng.integers(1, 6)), size=n)
        ct = contingency(a, b)
        assert ari(ct) == pytest.approx(
            ari_by_pair_enumeration(a, b), abs=1e-12
        ), f"ARI mismatch on trial {trial}"
        got = v_measure(ct)
        want = v_by_direct_entropy(a.tolist(), b.tolist())
        for g, w in zip(got, want):
            assert g == pytest.approx(w, abs=1e-12), f"V mismatch on trial {trial}"


def test_ari_is_symmetric_and_permutation_invariant():
    rng = np.random.default_rng(9)
    a = rng.integers(0, 4, size=30)
    b = rng.integers(0, 3, size=30)
    assert ari(contingency(a, b)) == pytest.approx(ari(contingency(b, a)), abs=1e-15)
    perm = rng.permutation(30)
    assert ari(contingency(a[perm], b[perm])) == pytest.approx(
        ari(contingency(a, b)), abs=1e-15
    )


def test_accuracy():
    truth = np.array([0, 1, 2, 1])
    assert accuracy(truth, np.array([0, 1, 2, 1])) == 1.0
    assert accuracy(truth, np.array([0, 1, 2, 2])) == 0.75
    assert accuracy(truth, np.array([1, 0, 0, 0])) == 0.0
