"""Error measures and synthetic noise."""
from __future__ import annotations

import numpy as np


def rel_error(f_k, f_true) -> float:
    """Plain l2 ratio ``||f_k - f_true|| / ||f_true||``."""
    denom = np.linalg.norm(f_true)
    if denom == 0:
        raise ZeroDivisionError("reference image is zero")
    return float(np.linalg.norm(np.asarray(f_k) - f_true) / denom)


def rel_residual(op, f_k, g, Wf=None) -> float:
    """``||W f_k - g|| / ||g||`` over the observed sensor rows.

    For a 0/1 window this is the plain l2 ratio restricted to the observed
    rows; ``Wf`` may be passed to save a forward solve.
    """
    if Wf is None:
        Wf = op.forward(f_k)
    denom = op.norm_y(g)
    if denom == 0:
        raise ZeroDivisionError("data vanish on the observed sensors")
    return op.norm_y(Wf - g) / denom


def add_noise(g, target_rel: float, seed=None, mask=None):
    """Add Gaussian noise with relative l2 size exactly ``target_rel``.

    ``mask`` (broadcast against ``g``) confines the noise to observed
    entries. Returns ``(noisy, delta)`` with ``delta = target_rel * ||g||_2``.
    """
    g = np.asarray(g, dtype=float)
    if target_rel < 0:
        raise ValueError(f"target_rel must be nonnegative, got {target_rel}")
    if target_rel == 0:
        return g.copy(), 0.0
    gnorm = np.linalg.norm(g)
    if gnorm == 0:
        raise ValueError("relative noise level is undefined for zero data")
    noise = np.random.default_rng(seed).standard_normal(g.shape)
    if mask is not None:
        noise *= np.broadcast_to(mask, g.shape)
    delta = target_rel * gnorm
    noise *= delta / np.linalg.norm(noise)
    return g + noise, float(delta)
