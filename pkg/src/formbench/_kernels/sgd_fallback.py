"""Pure-Python embedding-layout SGD, arithmetic-identical to the C kernel.

This is the fallback used when the compiled extension is unavailable.  Every
floating-point operation appears in the same order as in ``_sgd.pyx`` (and the
extension is compiled with -ffp-contract=off), so the two backends produce
bit-identical layouts for the same inputs and seed.  Expect it to be orders of
magnitude slower; see benchmarks/bench_sgd.py.
"""

from __future__ import annotations

from math import pow as _pow

import numpy as np

_MASK64 = (1 << 64) - 1


def optimize_layout(
    emb: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    epochs_per_sample: np.ndarray,
    n_epochs: int,
    a: float,
    b: float,
    lr: float,
    negative_sample_rate: int,
    seed: int,
) -> None:
    """Run the attract/repulse SGD over the edge list, updating emb in place.

    Edge i is processed in every epoch its schedule reaches (frequency
    proportional to its graph weight); each processing applies one attractive
    update to both endpoints and ``negative_sample_rate`` repulsive updates to
    the head against uniformly sampled points.  Per-dimension gradients are
    clipped to [-4, 4] and the learning rate decays linearly to zero.
    """
    n_points, dim = emb.shape
    coords = [[float(v) for v in row] for row in emb]
    head_l = [int(v) for v in head]
    tail_l = [int(v) for v in tail]
    eps = [float(v) for v in epochs_per_sample]
    next_sample = list(eps)
    bm1 = b - 1.0
    state = seed & _MASK64

    for epoch in range(n_epochs):
        alpha = lr * (1.0 - epoch / n_epochs)
        for i in range(len(eps)):
            if next_sample[i] > epoch:
                continue
            j = head_l[i]
            k = tail_l[i]
            cur = coords[j]
            other = coords[k]

            d2 = 0.0
            for d in range(dim):
                diff = cur[d] - other[d]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * _pow(d2, bm1)) / (a * _pow(d2, b) + 1.0)
                for d in range(dim):
                    g = coeff * (cur[d] - other[d])
                    if g > 4.0:
                        g = 4.0
                    elif g < -4.0:
                        g = -4.0
                    cur[d] += g * alpha
                    other[d] -= g * alpha
            next_sample[i] += eps[i]

            for _ in range(negative_sample_rate):
                # splitmix64 step; the C kernel consumes the same stream.
                state = (state + 0x9E3779B97F4A7C15) & _MASK64
                z = state
                z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
                z ^= z >> 31
                kn = z % n_points
                if kn == j:
                    continue
                neg = coords[kn]
                d2 = 0.0
                for d in range(dim):
                    diff = cur[d] - neg[d]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (2.0 * b) / ((0.001 + d2) * (a * _pow(d2, b) + 1.0))
                    for d in range(dim):
                        g = coeff * (cur[d] - neg[d])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        cur[d] += g * alpha
                else:
                    # coincident points: push the head a full clipped step
                    for d in range(dim):
                        cur[d] += 4.0 * alpha

    emb[:] = coords
