"""Counter-based random numbers.

Every lattice site draws its uniform variate from a hash of
``(seed, t, x)``, so a field is identical regardless of the window it was
sampled in or the order sites are visited.  Replicate streams are split by
hashing ``(seed, replicate)``.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(values):
    """Vectorised SplitMix64 finaliser on ``uint64`` input."""
    z = np.asarray(values, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(values) -> np.ndarray:
    # two's complement so negative coordinates hash distinctly
    return np.asarray(values, dtype=np.int64).astype(np.uint64)


def site_uniforms(seed: int, t: int, xs) -> np.ndarray:
    """Uniforms in [0, 1) for sites ``(xs, t)`` under ``seed``.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed.
    t : int
        Time coordinate shared by all sites.
    xs : array_like of int
        Spatial coordinates.
    """
    row = splitmix64(splitmix64(np.uint64(seed & _MASK64)) ^ _as_u64(t))
    h = splitmix64(row ^ _as_u64(xs))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def derive_seed(seed: int, index: int) -> int:
    """Seed of replicate ``index`` split from ``seed`` by hashing."""
    mixed = splitmix64(splitmix64(np.uint64(seed & _MASK64)) ^ _as_u64(index + 1))
    return int(mixed)


def replicate_generator(seed: int, index: int) -> np.random.Generator:
    """Independent numpy generator for replicate ``index``."""
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK64, index]))
