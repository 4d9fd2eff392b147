"""Landweber, steepest descent and CGNE in the weighted image/data metrics.

All solvers start from ``f_0 = 0`` and work with any operator exposing
``forward``, ``adjoint``, ``inner_x``/``norm_x``, ``inner_y``/``norm_y``
and ``domain_shape`` (see :class:`~patrecon.operators.PATOperator` and
:class:`~patrecon.operators.MatrixOperator`).
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .linalg import power_iteration
from .metrics import rel_error

logger = logging.getLogger(__name__)


class StepSizeError(ArithmeticError):
    """The iteration diverged; the step size is too large."""


class BreakdownError(ArithmeticError):
    """CGNE met ``W d = 0`` before the normal residual vanished."""


class NotReached(RuntimeError):
    """The discrepancy level was not reached within the iteration budget."""


@dataclass(frozen=True)
class StopRule:
    """Iteration budget, optionally combined with the discrepancy principle.

    With ``delta`` set, iterating stops at the first ``k`` whose residual
    is at most ``tau * delta``; ``max_iter`` always caps the run.
    """

    max_iter: int = 40
    delta: float | None = None
    tau: float = 1.5

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.delta is not None:
            if self.delta < 0:
                raise ValueError("delta must be nonnegative")
            if not self.tau > 1:
                raise ValueError(f"tau must exceed 1, got {self.tau}")

    @classmethod
    def max_iters(cls, n: int) -> "StopRule":
        return cls(max_iter=n)

    @classmethod
    def discrepancy(cls, delta: float, tau: float = 1.5, max_iter: int = 200) -> "StopRule":
        return cls(max_iter=max_iter, delta=delta, tau=tau)

    @property
    def kind(self) -> str:
        return "max_iters" if self.delta is None else "discrepancy"

    def satisfied(self, residual: float) -> bool:
        return self.delta is not None and residual <= self.tau * self.delta


@dataclass
class IterationLog:
    """Per-iteration history; entry 0 describes the initial guess."""

    g_norm: float
    rows: list = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter, repr=False)
    converged: bool = False

    def record(self, k, residual, f=None, truth=None, objective=None):
        rel_res = residual / self.g_norm if self.g_norm > 0 else 0.0
        err = rel_error(f, truth) if truth is not None and f is not None else float("nan")
        self.rows.append({
            "k": k,
            "residual": float(residual),
            "rel_residual": float(rel_res),
            "rel_error": float(err),
            "seconds": time.perf_counter() - self._t0,
            "objective": float("nan") if objective is None else float(objective),
        })

    def __len__(self):
        return len(self.rows)

    def column(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    @property
    def residuals(self) -> np.ndarray:
        return self.column("residual")

    @property
    def errors(self) -> np.ndarray:
        return self.column("rel_error")

    @property
    def iterations(self) -> int:
        return len(self.rows) - 1

    def to_csv(self, path, objective: bool | None = None) -> None:
        if objective is None:
            objective = any(np.isfinite(r["objective"]) for r in self.rows)
        names = ["k", "residual", "rel_residual", "rel_error", "seconds"]
        if objective:
            names.append("objective")
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=names, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                                 for k, v in row.items()})


def discrepancy_stop(residuals, delta: float, tau: float = 1.5) -> int:
    """First index whose residual is at most ``tau * delta``.

    >>> discrepancy_stop([5, 3, 1], delta=1, tau=2)
    2
    """
    if not tau > 1:
        raise ValueError(f"tau must exceed 1, got {tau}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if isinstance(residuals, IterationLog):
        residuals = residuals.residuals
    for k, res in enumerate(residuals):
        if res <= tau * delta:
            return k
    raise NotReached(f"residual never dropped below {tau * delta:g}")


def _check_data(op, g):
    g = np.asarray(g, dtype=float)
    if g.shape != tuple(op.range_shape):
        raise ValueError(f"data shape {g.shape} != {tuple(op.range_shape)}")
    return g


def _check_drift(op, f, g, residual_vec, k):
    fresh = g - op.forward(f)
    ref = max(op.norm_y(fresh), 1e-300)
    drift = op.norm_y(fresh - residual_vec) / ref
    if drift > 1e-6:
        logger.warning("recurred residual drifted by %.3g at iteration %d", drift, k)
    return drift


def normal_norm(op, iters: int = 20, seed: int = 42) -> float:
    """Power-iteration estimate of ``||W* W||`` in the image metric."""
    return power_iteration(op.normal, op.domain_shape, inner=op.inner_x,
                           iters=iters, seed=seed, project=op.project) ** 2


def landweber(op, g, gamma: float | None = None, stop: StopRule = StopRule(),
              truth=None):
    """Landweber iteration ``f <- f - gamma W*(W f - g)``.

    ``gamma`` defaults to ``0.9 * 2 / ||W*W||`` with the norm from 20 power
    iterations. Raises :class:`StepSizeError` once the residual exceeds ten
    times its initial value.
    """
    g = _check_data(op, g)
    if gamma is None:
        gamma = 1.8 / normal_norm(op)
    if not gamma > 0:
        raise ValueError(f"step size must be positive, got {gamma}")
    f = np.zeros(op.domain_shape)
    log = IterationLog(op.norm_y(g))
    residual_vec = -g
    res0 = op.norm_y(residual_vec)
    log.record(0, res0, f, truth)
    if stop.satisfied(res0):
        return f, log
    for k in range(stop.max_iter):
        f = f - gamma * op.adjoint(residual_vec)
        residual_vec = op.forward(f) - g
        res = op.norm_y(residual_vec)
        log.record(k + 1, res, f, truth)
        if res > 10 * res0:
            raise StepSizeError(
                f"Landweber residual grew to {res:.3g} (initial {res0:.3g}); reduce gamma")
        if stop.satisfied(res):
            break
    return f, log


def steepest_descent(op, g, stop: StopRule = StopRule(), truth=None):
    """Steepest descent with the exact step ``|s|_X^2 / |W s|_Y^2``.

    ``s = W*(W f - g)`` is the gradient of ``0.5 |W f - g|_Y^2`` in the
    image metric. A vanishing gradient ends the run as converged.
    """
    return _descent(op, _check_data(op, g), stop, truth)


def _descent(op, g, stop, truth, penalty=None):
    """Shared steepest-descent loop; ``penalty`` adds a quadratic term.

    ``penalty`` is a tuple ``(grad, energy)`` with ``grad(f)`` the image-
    metric gradient and ``energy(f)`` the quadratic form ``<grad(f), f>_X``.
    """
    f = np.zeros(op.domain_shape)
    log = IterationLog(op.norm_y(g))
    residual_vec = -g
    log.record(0, op.norm_y(residual_vec), f, truth,
               0.5 * op.norm_y(residual_vec) ** 2 if penalty else None)
    if stop.satisfied(log.residuals[-1]):
        return f, log
    for k in range(stop.max_iter):
        s = op.adjoint(residual_vec)
        if penalty is not None:
            s = s + penalty[0](f)
        ss = op.inner_x(s, s)
        if ss == 0.0:
            log.converged = True
            break
        Ws = op.forward(s)
        curvature = op.inner_y(Ws, Ws)
        if penalty is not None:
            curvature += penalty[1](s)
        if curvature <= 0.0:
            log.converged = True
            break
        gamma = ss / curvature
        f = f - gamma * s
        residual_vec = residual_vec - gamma * Ws
        if (k + 1) % 10 == 0:
            _check_drift(op, f, g, -residual_vec, k + 1)
        res = op.norm_y(residual_vec)
        objective = None
        if penalty is not None:
            objective = 0.5 * res ** 2 + 0.5 * penalty[1](f)
        log.record(k + 1, res, f, truth, objective)
        if stop.satisfied(res):
            break
    return f, log


def cgne(op, g, stop: StopRule = StopRule(), truth=None):
    """Conjugate gradients on the normal equation ``W* W f = W* g``.

    Residual norms ``|W f_k - g|_Y`` are nonincreasing in exact arithmetic.
    Raises :class:`BreakdownError` if ``W d_k = 0`` while ``W* r_k != 0``.
    """
    g = _check_data(op, g)
    f = np.zeros(op.domain_shape)
    log = IterationLog(op.norm_y(g))
    r = g.copy()
    log.record(0, op.norm_y(r), f, truth)
    if stop.satisfied(log.residuals[-1]):
        return f, log
    z = op.adjoint(r)
    zz = op.inner_x(z, z)
    d = z
    for k in range(stop.max_iter):
        if zz == 0.0:
            log.converged = True
            break
        Wd = op.forward(d)
        dd = op.inner_y(Wd, Wd)
        if dd == 0.0:
            raise BreakdownError(f"W d vanished at iteration {k}")
        alpha = zz / dd
        f = f + alpha * d
        r = r - alpha * Wd
        if (k + 1) % 10 == 0:
            _check_drift(op, f, g, r, k + 1)
        res = op.norm_y(r)
        log.record(k + 1, res, f, truth)
        if stop.satisfied(res) or k + 1 == stop.max_iter:
            break
        z = op.adjoint(r)
        zz_new = op.inner_x(z, z)
        d = z + (zz_new / zz) * d
        zz = zz_new
    return f, log
