"""Portable random streams for instance generation.

Every generator in :mod:`ifbkit.problems` draws from a PCG64 bit generator
seeded with the user seed, and consumes only uniform doubles from it
(``Generator.random``). Gaussian variates come from the Box-Muller transform
applied to consecutive pairs of uniforms, and random subsets come from a
stable argsort of uniforms. None of the distribution algorithms numpy is
free to change between releases are involved, so an instance is a function
of the seed and the draw order alone.
"""

import numpy as np


def make_rng(seed):
    """Return a ``numpy.random.Generator`` backed by ``PCG64(seed)``."""
    if seed is None or int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def uniform(rng, size=None):
    """Uniform doubles in [0, 1)."""
    return rng.random(size)


def normal(rng, shape):
    """Standard normal array of ``shape`` via Box-Muller.

    Consumes ``2 * ceil(n / 2)`` uniforms for ``n`` requested values; the
    array is filled in C order.
    """
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    n = int(np.prod(shape, dtype=np.int64))
    half = (n + 1) // 2
    u = rng.random(2 * half).reshape(half, 2)
    # 1 - u lies in (0, 1], so the log is finite
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.empty(2 * half)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n].reshape(shape)


def choose(rng, n, k):
    """Sorted array of ``k`` distinct indices drawn uniformly from ``range(n)``."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot choose {k} of {n}")
    keys = rng.random(n)
    return np.sort(np.argsort(keys, kind="stable")[:k])
