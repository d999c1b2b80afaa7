"""
Seeded hashing for sketches

All randomness is derived from (master seed, tags) through numpy's
SeedSequence, so the same seed always yields the same sketches.
"""
import math

import numpy as np

MERSENNE_61 = (1 << 61) - 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def derive_state(seed, *tags, count=1):
    """count uint64 words keyed by (seed, *tags)"""
    if seed < 0 or any(t < 0 for t in tags):
        raise ValueError(f"seeds and tags must be non-negative (seed={seed}, tags={tags})")
    return np.random.SeedSequence([int(seed), *map(int, tags)]).generate_state(
        count, dtype=np.uint64
    )


def mix64(x):
    """splitmix64 finalizer over a uint64 array (wrapping arithmetic)"""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over='ignore'):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def trailing_zeros(h):
    """Trailing zero count of each uint64 (64 for zero)"""
    h = np.asarray(h, dtype=np.uint64)
    with np.errstate(over='ignore'):
        low = h & (~h + np.uint64(1))
    out = np.full(h.shape, 64, dtype=np.int64)
    nz = low != 0
    out[nz] = np.log2(low[nz].astype(np.float64)).astype(np.int64)
    return out


def nested_depth(keys, indices, max_depth):
    """
    Geometric depth of each index under each key, capped at max_depth

    Depth >= l happens with probability 2^-l, so "depth >= l" selects
    nested subsets as l grows.

    Args:
        keys: (C,) uint64 keys
        indices: (n,) coordinate indices
        max_depth: Cap (inclusive)

    Returns:
        (C, n) int64 depths
    """
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    idx = mix64(np.asarray(indices, dtype=np.int64).astype(np.uint64)).reshape(1, -1)
    depth = trailing_zeros(mix64(keys ^ idx))
    return np.minimum(depth, max_depth)


def fingerprint_bases(seed, *tags, count):
    """Per-copy fingerprint bases z in [2, p-2]"""
    state = derive_state(seed, *tags, count=count)
    return [2 + int(s) % (MERSENNE_61 - 3) for s in state]


class PolynomialHash:
    """
    Degree-d polynomial over GF(p), p = 2^61 - 1; (d+1)-wise independent

    Args:
        seed: Master seed
        degree: Polynomial degree d
        tags: Extra derivation tags
    """

    def __init__(self, seed, degree, *tags):
        self.degree = degree
        state = derive_state(seed, *tags, count=degree + 1)
        self.coefficients = [int(s) % MERSENNE_61 for s in state]

    @classmethod
    def log_wise(cls, seed, num_vertices, *tags):
        """Theta(log V)-wise independent hash: degree ceil(log2 V)"""
        return cls(seed, max(1, math.ceil(math.log2(max(2, num_vertices)))), *tags)

    def __call__(self, x):
        acc = 0
        x = int(x) % MERSENNE_61
        for a in reversed(self.coefficients):
            acc = (acc * x + a) % MERSENNE_61
        return acc

    def bucket(self, x, num_buckets):
        return self(x) % num_buckets

    def buckets(self, xs, num_buckets):
        return np.array([self(x) % num_buckets for x in np.asarray(xs).tolist()], dtype=np.int64)
