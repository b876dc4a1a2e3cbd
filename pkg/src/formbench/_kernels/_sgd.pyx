# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled embedding-layout SGD; the hot loop of the reduction stage.

Keep every floating-point expression in the same order as in
sgd_fallback.py -- the two backends are required to agree bit-for-bit
(the build passes -ffp-contract=off for that reason).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow
from libc.stdint cimport int64_t, uint64_t


def optimize_layout(
    cnp.float64_t[:, ::1] emb,
    cnp.int64_t[::1] head,
    cnp.int64_t[::1] tail,
    cnp.float64_t[::1] epochs_per_sample,
    int n_epochs,
    double a,
    double b,
    double lr,
    int negative_sample_rate,
    unsigned long long seed,
):
    """In-place attract/repulse SGD over the edge list (see fallback docstring)."""
    cdef Py_ssize_t n_points = emb.shape[0]
    cdef Py_ssize_t dim = emb.shape[1]
    cdef Py_ssize_t n_edges = head.shape[0]
    cdef cnp.float64_t[::1] next_sample = np.array(epochs_per_sample, dtype=np.float64)

    cdef double bm1 = b - 1.0
    cdef uint64_t state = <uint64_t> seed
    cdef uint64_t z
    cdef uint64_t npoints_u = <uint64_t> n_points

    cdef Py_ssize_t epoch, i, d
    cdef int64_t j, k, kn
    cdef int p
    cdef double alpha, d2, diff, coeff, g

    for epoch in range(n_epochs):
        alpha = lr * (1.0 - <double> epoch / <double> n_epochs)
        for i in range(n_edges):
            if next_sample[i] > epoch:
                continue
            j = head[i]
            k = tail[i]

            d2 = 0.0
            for d in range(dim):
                diff = emb[j, d] - emb[k, d]
                d2 += diff * diff
            if d2 > 0.0:
                coeff = (-2.0 * a * b * pow(d2, bm1)) / (a * pow(d2, b) + 1.0)
                for d in range(dim):
                    g = coeff * (emb[j, d] - emb[k, d])
                    if g > 4.0:
                        g = 4.0
                    elif g < -4.0:
                        g = -4.0
                    emb[j, d] += g * alpha
                    emb[k, d] -= g * alpha
            next_sample[i] += epochs_per_sample[i]

            for p in range(negative_sample_rate):
                state = state + <uint64_t> 0x9E3779B97F4A7C15
                z = state
                z = (z ^ (z >> 30)) * <uint64_t> 0xBF58476D1CE4E5B9
                z = (z ^ (z >> 27)) * <uint64_t> 0x94D049BB133111EB
                z = z ^ (z >> 31)
                kn = <int64_t> (z % npoints_u)
                if kn == j:
                    continue
                d2 = 0.0
                for d in range(dim):
                    diff = emb[j, d] - emb[kn, d]
                    d2 += diff * diff
                if d2 > 0.0:
                    coeff = (2.0 * b) / ((0.001 + d2) * (a * pow(d2, b) + 1.0))
                    for d in range(dim):
                        g = coeff * (emb[j, d] - emb[kn, d])
                        if g > 4.0:
                            g = 4.0
                        elif g < -4.0:
                            g = -4.0
                        emb[j, d] += g * alpha
                else:
                    for d in range(dim):
                        emb[j, d] += 4.0 * alpha
