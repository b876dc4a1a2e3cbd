"""From-scratch UMAP: fuzzy k-NN graph construction and SGD layout.

The stages follow the standard UMAP recipe: exact brute-force k-NN under
Euclidean distance, per-point bandwidth calibration by binary search, fuzzy
union symmetrization (A + At - A*At), a spectral initialization from the
symmetric normalized graph Laplacian, and negative-sampling SGD on the
low-dimensional layout.  Everything is deterministic given the seed; the SGD
inner loop runs in the compiled kernel when available (see _kernels).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import _kernels
from .dataset import EmbeddingSet, UmapParams
from .seeding import seed_derive

SMOOTH_TOLERANCE = 1e-5
SMOOTH_ITERATIONS = 64
_DENSE_EIG_LIMIT = 2000
_KNN_BLOCK_ELEMENTS = 32 * 1024 * 1024  # float64 budget for one distance block


@dataclass(frozen=True)
class FuzzyGraph:
    """Symmetric fuzzy neighborhood graph with the calibration that built it."""

    weights: sp.csr_matrix  # symmetric, zero diagonal, values in (0, 1]
    rho: np.ndarray  # per-point distance to nearest neighbor
    sigma: np.ndarray  # per-point bandwidth

    @property
    def n_points(self) -> int:
        return self.weights.shape[0]

    def validate(self) -> None:
        w = self.weights
        if (abs(w - w.T) > 1e-12).nnz:
            raise ValueError("fuzzy graph is not symmetric")
        if w.diagonal().any():
            raise ValueError("fuzzy graph has nonzero diagonal")
        if w.nnz and ((w.data <= 0).any() or (w.data > 1).any()):
            raise ValueError("fuzzy graph weights must lie in (0, 1]")


@dataclass(frozen=True)
class ReducedSet:
    """Low-dimensional coordinates parallel to the source embedding ids."""

    ids: tuple[str, ...]
    coords: np.ndarray  # N x d float64
    d: int
    params: UmapParams

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords)
        if coords.shape != (len(self.ids), self.d):
            raise ValueError(
                f"coords shape {coords.shape} != ({len(self.ids)}, {self.d})"
            )
        if not np.isfinite(coords).all():
            raise ValueError("non-finite coordinates")


def knn_graph(data: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest other points per row, ascending distance, ties by index."""
    data = np.ascontiguousarray(data, dtype=np.float64)
    n = data.shape[0]
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of points {n}")
    indices = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    block = max(1, _KNN_BLOCK_ELEMENTS // max(1, n * data.shape[1]))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = data[start:stop, None, :] - data[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        d[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        dists[start:stop] = np.take_along_axis(d, order, axis=1)
    return indices, dists


def nearest_positive(dists: np.ndarray) -> np.ndarray:
    """rho: the smallest strictly positive distance per row (0 if none)."""
    masked = np.where(dists > 0, dists, np.inf)
    rho = masked.min(axis=1)
    return np.where(np.isfinite(rho), rho, 0.0)


def smooth_knn(dists: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Per-point sigma such that sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k).

    64-iteration binary search to within 1e-5.  Rows with no positive
    distance (all-duplicate neighborhoods) get sigma = 1.
    """
    n, k = dists.shape
    target = np.log2(k)
    shifted = np.maximum(dists - rho[:, None], 0.0)
    degenerate = ~(dists > 0).any(axis=1)

    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    done = degenerate.copy()
    for _ in range(SMOOTH_ITERATIONS):
        if done.all():
            break
        psum = np.exp(-shifted / mid[:, None]).sum(axis=1)
        done |= np.abs(psum - target) < SMOOTH_TOLERANCE
        too_big = (psum > target) & ~done
        too_small = (psum <= target) & ~done
        hi[too_big] = mid[too_big]
        mid[too_big] = (lo[too_big] + hi[too_big]) / 2.0
        lo[too_small] = mid[too_small]
        unbounded = too_small & np.isinf(hi)
        mid[unbounded] = mid[unbounded] * 2.0
        bounded = too_small & ~np.isinf(hi)
        mid[bounded] = (lo[bounded] + hi[bounded]) / 2.0
    sigma = mid
    sigma[degenerate] = 1.0
    return sigma


def membership_strengths(
    indices: np.ndarray, dists: np.ndarray, rho: np.ndarray, sigma: np.ndarray
) -> sp.csr_matrix:
    """Directed edge weights exp(-max(0, d - rho)/sigma) as a sparse matrix."""
    n, k = indices.shape
    vals = np.exp(-np.maximum(dists - rho[:, None], 0.0) / sigma[:, None])
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    return sp.csr_matrix(
        (vals.ravel(), (rows, indices.ravel().astype(np.int64))), shape=(n, n)
    )


def fuzzy_union(directed: sp.spmatrix) -> sp.csr_matrix:
    """Probabilistic t-conorm symmetrization: A + At - A*At (elementwise product)."""
    directed = directed.tocsr()
    transpose = directed.T.tocsr()
    sym = directed + transpose - directed.multiply(transpose)
    sym = sp.csr_matrix(sym)
    sym.eliminate_zeros()
    return sym


def fuzzy_graph(data: np.ndarray, n_neighbors: int) -> FuzzyGraph:
    """Build the symmetric fuzzy neighborhood graph for a data matrix."""
    indices, dists = knn_graph(data, n_neighbors)
    rho = nearest_positive(dists)
    sigma = smooth_knn(dists, rho)
    graph = FuzzyGraph(
        weights=fuzzy_union(membership_strengths(indices, dists, rho, sigma)),
        rho=rho,
        sigma=sigma,
    )
    graph.validate()
    return graph


def _curve(x2b: np.ndarray, a: float) -> np.ndarray:
    return 1.0 / (1.0 + a * x2b)


def fit_ab(min_dist: float, spread: float = 1.0) -> tuple[float, float]:
    """Least-squares fit of 1/(1 + a*x^(2b)) to the min_dist/spread target curve.

    Coarse grid search followed by Levenberg-Marquardt refinement on a
    300-point grid over [0, 3*spread].
    """
    x = np.linspace(0.0, 3.0 * spread, 300)
    y = np.where(x <= min_dist, 1.0, np.exp(-(x - min_dist) / spread))
    logx = np.zeros_like(x)
    logx[x > 0] = np.log(x[x > 0])

    def sse(a: float, b: float) -> float:
        x2b = np.where(x > 0, np.exp(2.0 * b * logx), 0.0)
        r = _curve(x2b, a) - y
        return float(r @ r)

    def residual_jacobian(a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        x2b = np.where(x > 0, np.exp(2.0 * b * logx), 0.0)
        denom = (1.0 + a * x2b) ** 2
        r = 1.0 / (1.0 + a * x2b) - y
        da = -x2b / denom
        db = -2.0 * a * x2b * logx / denom
        return r, np.column_stack([da, db])

    best = (1.0, 1.0)
    best_sse = sse(*best)
    for a in np.geomspace(0.05, 20.0, 30):
        for b in np.linspace(0.3, 2.5, 23):
            s = sse(a, b)
            if s < best_sse:
                best, best_sse = (float(a), float(b)), s

    a, b = best
    lam = 1e-3
    for _ in range(200):
        r, jac = residual_jacobian(a, b)
        jtj = jac.T @ jac
        g = jac.T @ r
        try:
            delta = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj)), -g)
        except np.linalg.LinAlgError:
            break
        a_new, b_new = a + delta[0], b + delta[1]
        if a_new <= 0 or b_new <= 0 or sse(a_new, b_new) >= best_sse:
            lam *= 3.0
            if lam > 1e9:
                break
            continue
        a, b = float(a_new), float(b_new)
        best_sse = sse(a, b)
        lam = max(lam / 3.0, 1e-12)
        if np.abs(delta).max() < 1e-12:
            break
    return a, b


def spectral_init(
    graph: FuzzyGraph, d: int, rng: np.random.Generator
) -> np.ndarray:
    """Bottom nontrivial eigenvectors of the symmetric normalized Laplacian.

    Falls back to uniform random coordinates in [-10, 10]^d when the sparse
    eigensolver fails to converge.  The layout is rescaled to max-abs 10 and
    jittered slightly so coincident rows can separate.
    """
    n = graph.n_points
    w = graph.weights
    deg = np.asarray(w.sum(axis=1)).ravel()
    inv_sqrt = np.zeros(n)
    positive = deg > 0
    inv_sqrt[positive] = 1.0 / np.sqrt(deg[positive])

    if d + 1 >= n:
        coords = rng.uniform(-10.0, 10.0, size=(n, d))
        return coords
    try:
        if n <= _DENSE_EIG_LIMIT:
            norm_adj = (inv_sqrt[:, None] * w.toarray()) * inv_sqrt[None, :]
            lap = np.eye(n) - norm_adj
            _, vecs = np.linalg.eigh(lap)
            coords = vecs[:, 1 : d + 1]
        else:
            scale = sp.diags(inv_sqrt)
            lap = sp.identity(n, format="csr") - scale @ w @ scale
            vals, vecs = eigsh(
                lap,
                k=d + 1,
                which="SM",
                tol=1e-4,
                v0=np.ones(n),
                maxiter=n * 5,
            )
            coords = vecs[:, np.argsort(vals)[1 : d + 1]]
    except (ArpackNoConvergence, np.linalg.LinAlgError):
        warnings.warn("spectral initialization failed to converge; using random")
        return rng.uniform(-10.0, 10.0, size=(n, d))

    max_abs = np.abs(coords).max()
    if max_abs == 0:
        return rng.uniform(-10.0, 10.0, size=(n, d))
    coords = coords * (10.0 / max_abs)
    return coords + rng.normal(scale=1e-4, size=coords.shape)


def optimize(
    graph: FuzzyGraph,
    d: int,
    params: UmapParams,
    ids: tuple[str, ...] | None = None,
) -> ReducedSet:
    """Lay out the fuzzy graph in d dimensions by negative-sampling SGD."""
    n = graph.n_points
    degrees = np.diff(graph.weights.indptr)
    isolated = np.nonzero(degrees == 0)[0]
    if isolated.size:
        warnings.warn(
            f"{isolated.size} isolated vertices placed at the origin "
            f"(first: {int(isolated[0])})"
        )

    n_epochs = params.n_epochs if params.n_epochs is not None else (
        500 if n < 10_000 else 200
    )
    a, b = fit_ab(params.min_dist, params.spread)

    rng = np.random.default_rng(params.seed)
    coords = np.ascontiguousarray(spectral_init(graph, d, rng), dtype=np.float64)
    coords[isolated] = 0.0

    coo = graph.weights.tocoo()
    if coo.nnz:
        head = coo.row.astype(np.int64)
        tail = coo.col.astype(np.int64)
        epochs_per_sample = coo.data.max() / coo.data.astype(np.float64)
        _kernels.optimize_layout(
            coords,
            head,
            tail,
            epochs_per_sample,
            int(n_epochs),
            float(a),
            float(b),
            float(params.learning_rate),
            int(params.negative_sample_rate),
            seed_derive(params.seed, "layout-sgd", d),
        )
    coords[isolated] = 0.0

    if ids is None:
        ids = tuple(str(i) for i in range(n))
    return ReducedSet(ids=ids, coords=coords, d=d, params=params)


def reduce_embeddings(
    embeddings: EmbeddingSet, dims: list[int], params: UmapParams
) -> list[ReducedSet]:
    """Reduce one embedding set to each target dimension.

    The fuzzy graph is shared across targets; each target gets its own seed
    derived from params.seed so the reductions are independent runs.
    """
    n = embeddings.n_samples
    if params.n_neighbors >= n:
        raise ValueError(
            f"n_neighbors={params.n_neighbors} must be below the sample count {n}"
        )
    for d in dims:
        if d >= embeddings.dim:
            raise ValueError(
                f"target dim {d} must be below the embedding dim {embeddings.dim}"
            )
    graph = fuzzy_graph(embeddings.data.astype(np.float64), params.n_neighbors)
    reduced = []
    for d in dims:
        per_dim = replace(params, seed=seed_derive(params.seed, "umap-dim", d))
        reduced.append(optimize(graph, d, per_dim, ids=embeddings.ids))
    return reduced
