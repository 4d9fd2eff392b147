"""Quadratic-gradient and total-variation penalised reconstruction.

Both functionals use the same weighted metrics as the solvers: the data
term is ``0.5 |W f - g|_Y^2`` and the penalties sum the discrete gradient
with the cell weight of the image grid, ``h^2 sum |D f|^2`` or
``h^2 sum |D f|``. By default ``D`` takes differences per pixel
(``pixel_units=True``), which keeps the useful range of ``lambda``
independent of the resolution; ``pixel_units=False`` divides by ``h``
so the penalties approximate ``int |grad f|^2`` and ``int |grad f|``.
"""
from __future__ import annotations

import logging

import numpy as np

from .linalg import power_iteration
from .solvers import IterationLog, StopRule, _check_data, _descent

logger = logging.getLogger(__name__)


def grad(f: np.ndarray, h: float = 1.0) -> np.ndarray:
    """Forward differences with a zero last difference along every axis.

    Returns an array of shape ``(f.ndim, *f.shape)``.
    """
    f = np.asarray(f, dtype=float)
    out = np.zeros((f.ndim,) + f.shape)
    for axis in range(f.ndim):
        lead = [slice(None)] * f.ndim
        lead[axis] = slice(0, -1)
        out[(axis, *lead)] = np.diff(f, axis=axis) / h
    return out


def div_adj(q: np.ndarray, h: float = 1.0) -> np.ndarray:
    """Transpose of :func:`grad`, i.e. minus the discrete divergence."""
    q = np.asarray(q, dtype=float)
    ndim = q.ndim - 1
    out = np.zeros(q.shape[1:])
    for axis in range(ndim):
        qa = q[axis]
        lead = [slice(None)] * ndim
        lead[axis] = slice(0, -1)
        qa = qa[tuple(lead)]
        # (D^T q)_i = q_{i-1} - q_i with q_{-1} = q_{n-1} = 0
        pad = [(0, 0)] * ndim
        pad[axis] = (1, 1)
        qp = np.pad(qa, pad)
        lo = [slice(None)] * ndim
        hi = [slice(None)] * ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        out += (qp[tuple(lo)] - qp[tuple(hi)]) / h
    return out


def project_dual(v: np.ndarray, lam: float) -> np.ndarray:
    """Pointwise ``lam * v / max(lam, |v|)`` with ``|v|`` over the first axis."""
    mag = np.sqrt(np.sum(v * v, axis=0))
    return v * (lam / np.maximum(lam, mag))


class ImageGradient:
    """The discrete gradient as a map from the image space of ``op``.

    The gradient space carries ``<q1, q2>_Z = w sum q1 q2`` with the cell
    weight ``w`` of ``op``; the adjoint is taken with respect to that metric
    and the image metric of ``op``. ``scale`` multiplies the map; with
    ``pixel_units`` the differences are not divided by the spacing.
    """

    def __init__(self, op, scale: float = 1.0, pixel_units: bool = False):
        self.op = op
        self.scale = float(scale)
        self.h = 1.0 if pixel_units else float(op.spacing)
        self.domain_shape = tuple(op.domain_shape)
        self.range_shape = (len(self.domain_shape),) + self.domain_shape

    def forward(self, f):
        return self.scale * grad(np.reshape(f, self.domain_shape), self.h)

    def adjoint(self, q):
        return self.scale * self.op.riesz(self.op.cell_weight * div_adj(q, self.h))

    def normal(self, f):
        return self.adjoint(self.forward(f))

    def project(self, f):
        return self.op.project(f)

    def inner_x(self, f1, f2):
        return self.op.inner_x(f1, f2)

    def inner_y(self, q1, q2):
        return float(self.op.cell_weight * np.sum(q1 * q2))

    def norm_y(self, q):
        return float(np.sqrt(max(self.inner_y(q, q), 0.0)))

    def total_variation(self, f) -> float:
        """``w sum |D f|`` (unscaled by ``scale``)."""
        d = grad(np.reshape(f, self.domain_shape), self.h)
        return float(self.op.cell_weight * np.sum(np.sqrt(np.sum(d * d, axis=0))))


def operator_norm(*parts, iters: int = 30, seed: int = 42) -> float:
    """Power-iteration norm of the stacked map ``(K_1, ..., K_m)``.

    Every part acts on the same image space; the first one supplies the
    inner product, the domain shape and the support projection.
    """
    if not parts:
        raise ValueError("need at least one operator")
    first = parts[0]

    def normal(f):
        out = first.normal(f)
        for part in parts[1:]:
            out = out + part.normal(f)
        return out

    return power_iteration(normal, first.domain_shape, inner=first.inner_x,
                           iters=iters, seed=seed, project=first.project)


def h1_reconstruct(op, g, lam: float = 0.1, stop: StopRule = StopRule(), truth=None,
                   pixel_units: bool = True):
    """Steepest descent for ``0.5 |W f - g|_Y^2 + lam/2 |D f|_Z^2``.

    The step size is the exact minimiser along the negative gradient. With
    ``lam = 0`` the iterates coincide with :func:`~patrecon.solvers.steepest_descent`.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    g = _check_data(op, g)
    D = ImageGradient(op, pixel_units=pixel_units)

    def penalty_grad(f):
        return lam * D.normal(f)

    def penalty_energy(f):
        d = D.forward(f)
        return lam * D.inner_y(d, d)

    return _descent(op, g, stop, truth, penalty=(penalty_grad, penalty_energy))


def tv_reconstruct(op, g, lam: float = 0.1, iters: int = 50, truth=None,
                   balance: float = 1.0, norm_iters: int = 30, seed: int = 42,
                   pixel_units: bool = True):
    """Primal-dual (Chambolle-Pock) minimisation of ``0.5 |W f - g|_Y^2 + lam TV(f)``.

    ``TV(f) = w sum |D f|`` with the cell weight ``w``. Step sizes are
    ``sigma = tau = 1 / L`` with ``L`` the power-iteration estimate of the
    norm of the stacked map, enlarged by 1 %, and ``theta = 1``.

    ``balance`` rescales the gradient block to ``mu D`` with
    ``mu = balance * |W| / |D|`` and the dual ball radius to ``lam / mu``.
    The functional is unchanged; only the relative step of the two dual
    variables moves. ``balance=0`` keeps ``mu = 1``.

    Returns ``(f, log)``; the log carries the residual ``|W f_k - g|_Y``
    and the objective at every iterate.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if iters < 0:
        raise ValueError("iters must be nonnegative")
    if balance < 0:
        raise ValueError("balance must be nonnegative")
    g = _check_data(op, g)
    mu = 1.0
    if balance:
        w_norm = operator_norm(op, iters=norm_iters, seed=seed)
        d_norm = operator_norm(ImageGradient(op, pixel_units=pixel_units),
                               iters=norm_iters, seed=seed)
        if w_norm > 0 and d_norm > 0:
            mu = balance * w_norm / d_norm
    D = ImageGradient(op, scale=mu, pixel_units=pixel_units)
    L_est = operator_norm(op, D, iters=norm_iters, seed=seed)
    L = 1.01 * L_est
    if not (np.isfinite(L) and L > 0):
        raise ArithmeticError(f"invalid operator norm estimate {L_est}")
    sigma = tau = 1.0 / L
    assert sigma * tau * L_est ** 2 <= 1.0
    radius = lam / mu
    logger.debug("tv: L=%.4g mu=%.4g", L, mu)

    def objective(res):
        return 0.5 * res ** 2 + lam * D.total_variation(f)

    f = np.zeros(op.domain_shape)
    u = f
    p = np.zeros(op.range_shape)
    q = np.zeros(D.range_shape)
    Wf = np.zeros(op.range_shape)
    Wu = Wf
    log = IterationLog(op.norm_y(g))
    res = op.norm_y(Wf - g)
    log.record(0, res, f, truth, objective(res))
    for k in range(iters):
        p = (p + sigma * (Wu - g)) / (1.0 + sigma)
        q = project_dual(q + sigma * D.forward(u), radius)
        f_next = op.project(f - tau * (op.adjoint(p) + D.adjoint(q)))
        u = 2.0 * f_next - f
        f = f_next
        Wu_next = op.forward(u)
        # W is linear, so W f_{k+1} = (W u_{k+1} + W f_k) / 2
        Wf = 0.5 * (Wu_next + Wf)
        Wu = Wu_next
        res = op.norm_y(Wf - g)
        log.record(k + 1, res, f, truth, objective(res))
    return f, log
