"""Power iteration for the norm of a linear map."""
from __future__ import annotations

import numpy as np


def power_iteration(normal, shape, inner=None, iters: int = 30, seed: int = 42,
                    project=None) -> float:
    """Estimate ``||K||`` from its self-adjoint normal map ``K*K``.

    Parameters
    ----------
    normal : callable
        ``x -> K*K x``, self-adjoint with respect to ``inner``.
    shape : tuple
        Shape of the domain vectors.
    inner : callable, optional
        Inner product of the domain; Euclidean by default.
    iters : int
        Number of applications of ``normal``.
    seed : int
        Seed of the random start vector.
    project : callable, optional
        Applied to the start vector (e.g. a support mask).

    Returns
    -------
    float
        ``sqrt(<K*K x, x> / <x, x>)`` for the last iterate ``x``.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if inner is None:
        def inner(a, b):
            return float(np.vdot(a, b))
    rng = np.random.default_rng(seed)
    x = None
    for _ in range(2):
        x = rng.standard_normal(shape)
        if project is not None:
            x = project(x)
        if inner(x, x) > 0:
            break
    else:
        raise ValueError("could not draw a nonzero start vector")
    x = x / np.sqrt(inner(x, x))
    rayleigh = 0.0
    for _ in range(iters):
        y = normal(x)
        rayleigh = inner(y, x)
        ny = np.sqrt(max(inner(y, y), 0.0))
        if ny == 0.0:
            return 0.0
        x = y / ny
    y = normal(x)
    rayleigh = inner(y, x)
    return float(np.sqrt(max(rayleigh, 0.0)))
