"""Deterministic seed derivation for pipeline stages.

Every randomized stage (UMAP layout, k-means trials, probe folds, ...) gets
its own 64-bit seed derived from the run's master seed, a stage label, and an
index.  The derivation is a fixed hash mix, so re-running any stage in
isolation reproduces the exact stream the full pipeline used.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def _splitmix64(x: int) -> int:
    # Finalizer of the splitmix64 generator; full-avalanche 64-bit mix.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def seed_derive(master: int, stage: str, index: int = 0) -> int:
    """Derive a stage seed as splitmix64(splitmix64(master ^ fnv1a(stage)) ^ index).

    Stable across versions: changing this mix invalidates every recorded run.
    """
    h = _fnv1a64(stage.encode("utf-8"))
    return _splitmix64(_splitmix64((master & _MASK64) ^ h) ^ (index & _MASK64))
