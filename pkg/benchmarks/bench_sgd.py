"""Time the compiled layout kernel against the pure-Python fallback.

Run as ``python benchmarks/bench_sgd.py``.  Both kernels execute the same
operation sequence, so besides the timing this also checks their outputs
agree bit for bit.
"""

from __future__ import annotations

import time

import numpy as np

from formbench._kernels import BACKEND, sgd_fallback
from formbench.dataset import UmapParams
from formbench.umap import fuzzy_graph

try:
    from formbench._kernels import _sgd
except ImportError:
    _sgd = None


def _layout_inputs(n: int = 400, dim: int = 32, seed: int = 7):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(4, dim)) * 8.0
    data = np.concatenate(
        [center + rng.normal(size=(n // 4, dim)) for center in centers]
    )
    graph = fuzzy_graph(data, UmapParams().n_neighbors)
    coo = graph.weights.tocoo()
    head = coo.row.astype(np.int64)
    tail = coo.col.astype(np.int64)
    eps = coo.data.max() / coo.data.astype(np.float64)
    init = rng.uniform(-10.0, 10.0, size=(data.shape[0], 2))
    return init, head, tail, eps


def _run(kernel, init, head, tail, eps, n_epochs: int) -> tuple[np.ndarray, float]:
    coords = init.copy()
    start = time.perf_counter()
    kernel.optimize_layout(coords, head, tail, eps, n_epochs, 1.58, 0.9, 1.0, 5, 42)
    return coords, time.perf_counter() - start


def main() -> None:
    init, head, tail, eps = _layout_inputs()
    n_epochs = 200
    print(f"{init.shape[0]} points, {head.shape[0]} edges, {n_epochs} epochs")

    pure_coords, pure_time = _run(sgd_fallback, init, head, tail, eps, n_epochs)
    print(f"pure python : {pure_time:8.3f} s")

    if _sgd is None:
        print("compiled    : not built (FORMBENCH_SKIP_EXT or build failure)")
        print(f"active backend: {BACKEND}")
        return

    fast_coords, fast_time = _run(_sgd, init, head, tail, eps, n_epochs)
    print(f"compiled    : {fast_time:8.3f} s")
    print(f"speedup     : {pure_time / fast_time:8.1f} x")
    match = np.array_equal(pure_coords, fast_coords)
    print(f"bit-identical outputs: {match}")
    if not match:
        diff = np.abs(pure_coords - fast_coords).max()
        print(f"max abs difference: {diff:.3e}")
    print(f"active backend: {BACKEND}")


if __name__ == "__main__":
    main()
