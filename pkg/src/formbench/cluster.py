"""K-means clustering and leave-one-out KNN classification on reduced coords.

K-means matches the evaluation protocol: per-sample L2 normalization, k-means++
seeding, Lloyd iterations to an assignment fixpoint, three trials per reduction,
ARI and V-measure against ground truth aggregated over (trial x dim) runs.
The KNN classifier is leave-one-out under cosine distance with deterministic
tie-breaking (smallest summed distance, then lowest label index).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .seeding import seed_derive
from .umap import ReducedSet

_MAX_LLOYD_ITERATIONS = 300


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray  # cluster index per point
    centers: np.ndarray  # k x d
    inertia: float  # sum of squared distances to assigned centers
    seed: int


@dataclass(frozen=True)
class KnnResult:
    predictions: np.ndarray  # label per point
    accuracy: float
    k: int


@dataclass
class ClusterScores:
    """ARI / V-measure aggregate over all (trial x dim) k-means runs."""

    ari_mean: float
    ari_std: float
    v_mean: float
    v_std: float
    per_run: list[dict] = field(default_factory=list)
    best_inertia_run: dict | None = None


def l2_normalize(coords: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm; zero rows pass through."""
    coords = np.asarray(coords, dtype=np.float64)
    norms = np.linalg.norm(coords, axis=1, keepdims=True)
    safe = np.where(norms == 0, 1.0, norms)
    return coords / safe


def _closest(coords: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assignments = d2.argmin(axis=1)
    return assignments, d2


def _plusplus_init(
    coords: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = coords.shape[0]
    centers = np.empty((k, coords.shape[1]), dtype=np.float64)
    centers[0] = coords[rng.integers(n)]
    d2 = ((coords - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = coords[idx]
        d2 = np.minimum(d2, ((coords - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans(coords: np.ndarray, k: int, seed: int) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, deterministic given the seed.

    Runs to an assignment fixpoint (or 300 iterations); an emptied cluster
    seizes the point currently farthest from its assigned center.  A point
    whose current cluster ties for nearest keeps it, so seizures stick and
    the loop terminates even on duplicate-point geometry.  Inertia is checked
    to be non-increasing on every iteration.
    """
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points {n}")
    if not np.isfinite(coords).all():
        raise ValueError("coords must be finite")

    rng = np.random.default_rng(seed)
    centers = _plusplus_init(coords, k, rng)
    assignments, d2 = _closest(coords, centers)
    previous_inertia = np.inf

    for _ in range(_MAX_LLOYD_ITERATIONS):
        point_d2 = d2[np.arange(n), assignments]
        empties = np.setdiff1d(np.arange(k), assignments)
        for empty in empties:
            farthest = int(point_d2.argmax())
            centers[empty] = coords[farthest]
            assignments[farthest] = empty
            point_d2[farthest] = 0.0

        inertia = float(point_d2.sum())
        if np.isfinite(previous_inertia):
            assert inertia <= previous_inertia + 1e-9 * (1.0 + previous_inertia), (
                f"inertia increased: {previous_inertia} -> {inertia}"
            )
        previous_inertia = inertia

        for c in range(k):
            members = assignments == c
            if members.any():
                centers[c] = coords[members].mean(axis=0)

        nearest, d2 = _closest(coords, centers)
        stay = d2[np.arange(n), assignments] == d2[np.arange(n), nearest]
        new_assignments = np.where(stay, assignments, nearest)
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

    inertia = float(d2[np.arange(n), assignments].sum())
    return KMeansResult(
        assignments=assignments, centers=centers, inertia=inertia, seed=seed
    )


def kmeans_eval(
    reduced: list[ReducedSet],
    labels: np.ndarray,
    k: int,
    trials: int = 3,
    seed: int = 0,
) -> ClusterScores:
    """Cluster every reduction ``trials`` times and score against ground truth."""
    labels = np.asarray(labels)
    runs = []
    for dim_index, red in enumerate(reduced):
        normalized = l2_normalize(red.coords)
        for trial in range(trials):
            run_seed = seed_derive(seed, "kmeans", dim_index * trials + trial)
            result = kmeans(normalized, k, run_seed)
            ct = metrics.contingency(labels, result.assignments)
            _, _, v = metrics.v_measure(ct)
            runs.append(
                {
                    "dim": red.d,
                    "trial": trial,
                    "seed": run_seed,
                    "inertia": result.inertia,
                    "ari": metrics.ari(ct),
                    "v_measure": v,
                }
            )
    aris = np.array([r["ari"] for r in runs])
    vs = np.array([r["v_measure"] for r in runs])
    best = min(runs, key=lambda r: r["inertia"])
    return ClusterScores(
        ari_mean=float(aris.mean()),
        ari_std=float(aris.std()),
        v_mean=float(vs.mean()),
        v_std=float(vs.std()),
        per_run=runs,
        best_inertia_run=best,
    )


def cosine_distances(coords: np.ndarray) -> np.ndarray:
    """Pairwise 1 - cosine similarity; zero rows are treated as similarity 0."""
    normalized = l2_normalize(coords)
    return 1.0 - normalized @ normalized.T


def knn_classify(coords: np.ndarray, labels: np.ndarray, k: int) -> KnnResult:
    """Leave-one-out majority vote among the k nearest points by cosine distance.

    Vote ties break by the smallest summed distance over the tied label's
    neighbors, then by the lowest label index.  Point i never votes for itself.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = coords.shape[0]
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of points {n}")
    dist = cosine_distances(coords)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]

    predictions = np.empty(n, dtype=np.int64)
    for i in range(n):
        neighbor_labels = labels[order[i]]
        neighbor_dists = dist[i, order[i]]
        counts = np.bincount(neighbor_labels)
        top = counts.max()
        tied = np.nonzero(counts == top)[0]
        if tied.size == 1:
            predictions[i] = tied[0]
            continue
        sums = np.array(
            [neighbor_dists[neighbor_labels == lbl].sum() for lbl in tied]
        )
        predictions[i] = int(tied[sums.argmin()])
    return KnnResult(
        predictions=predictions,
        accuracy=metrics.accuracy(labels, predictions),
        k=k,
    )


def knn_eval(
    reduced: list[ReducedSet], labels: np.ndarray, k: int = 10
) -> tuple[float, list[KnnResult]]:
    """Run the leave-one-out classifier per reduction; return the dim-averaged accuracy."""
    results = [knn_classify(red.coords, labels, k) for red in reduced]
    return float(np.mean([r.accuracy for r in results])), results
