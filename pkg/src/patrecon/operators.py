"""Forward operator, its continuous adjoint and the weighted inner products.

The image space carries ``<f1, f2>_X = h^2 sum c^-2 f1 f2`` over the
radius-0.9 ball, the data space ``<g1, g2>_Y = h h_t sum chi g1 g2`` over
sensors and time samples. The adjoint is the discretised time-reversed
wave solve (not the transpose of the discrete forward map), so the adjoint
identity holds up to discretisation error only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Medium, SensorArray
from .kspace import Propagator, simulate


@dataclass(frozen=True)
class Sinogram:
    """Sensor by time pressure samples on ``[0, T]``."""

    values: np.ndarray
    h_t: float
    sensors: SensorArray | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] < 2:
            raise ValueError(f"sinogram must be count x nt with nt >= 2, got {values.shape}")
        if self.h_t <= 0:
            raise ValueError("time step must be positive")
        if self.sensors is not None and values.shape[0] != self.sensors.count:
            raise ValueError("sinogram rows do not match the sensor count")
        object.__setattr__(self, "values", values)

    @property
    def nt(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return (self.nt - 1) * self.h_t


class PATOperator:
    """Initial pressure to boundary data map for a damped medium.

    Parameters
    ----------
    medium : Medium
        Sound speed and damping on the computational grid.
    sensors : SensorArray
        Boundary pixels and their 0/1 window ``chi``.
    nt : int
        Time samples including ``t = 0``.
    T : float
        Final time; ``h_t = T / (nt - 1)``.
    fft_pad : bool
        Let the propagator extend the periodic domain to a fast FFT size.
    """

    def __init__(self, medium: Medium, sensors: SensorArray, nt: int, T: float,
                 fft_pad: bool = True):
        if sensors.grid != medium.grid:
            raise ValueError("sensors and medium live on different grids")
        if nt < 2:
            raise ValueError(f"need nt >= 2, got {nt}")
        if T <= 0:
            raise ValueError(f"final time must be positive, got {T}")
        self.medium = medium
        self.sensors = sensors
        self.grid = medium.grid
        self.nt = int(nt)
        self.T = float(T)
        self.h_t = self.T / (self.nt - 1)
        self.omega0_mask = self.grid.omega0_mask()
        self._propagator = Propagator(medium, self.h_t, fft_pad=fft_pad)
        self._x_weight = self.grid.h ** 2 * self.omega0_mask / medium.c ** 2
        self._y_weight = self.grid.h * self.h_t * sensors.chi[:, None]

    @property
    def domain_shape(self):
        return self.grid.shape

    @property
    def range_shape(self):
        return (self.sensors.count, self.nt)

    @property
    def spacing(self) -> float:
        return self.grid.h

    @property
    def cell_weight(self) -> float:
        return self.grid.h ** 2

    def project(self, f: np.ndarray) -> np.ndarray:
        """Restrict ``f`` to the radius-0.9 ball."""
        return self.omega0_mask * f

    def riesz(self, v: np.ndarray) -> np.ndarray:
        """Representer in the image metric of the plain linear form ``v``.

        ``<riesz(v), f>_X = sum(v * f)`` for every ``f`` supported in the
        ball.
        """
        return self.omega0_mask * self.medium.c ** 2 * v / self.grid.h ** 2

    def forward(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.domain_shape:
            raise ValueError(f"image shape {f.shape} != {self.domain_shape}")
        data, _ = simulate(self.project(f), self.medium, self.sensors, self.nt,
                           self.h_t, propagator=self._propagator)
        return data

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        """Time derivative at ``t = 0`` of the adjoint wave field.

        The adjoint equation is solved forward in reversed time ``T - t``
        with zero initial data and the source ``chi g(T - t) / h`` on the
        sensor pixels (``1/h`` discretises the boundary delta). With this
        source sign the adjoint is ``+ d/dt`` of the reversed solution at
        reversed time ``T``, taken as a centred difference.
        """
        g = np.asarray(g, dtype=float)
        if g.shape != self.range_shape:
            raise ValueError(f"data shape {g.shape} != {self.range_shape}")
        weighted = self.sensors.chi[:, None] * g / self.grid.h
        ix, iy = self.sensors.positions[:, 0], self.sensors.positions[:, 1]
        src = np.zeros(self._propagator.shape)
        last = self.nt - 1
        state = self._propagator.initial_state(np.zeros(self.grid.shape))
        before = state.p
        # one step past T so the derivative at T is a centred difference
        for n in range(last + 1):
            src[ix, iy] = weighted[:, last - n]
            state = self._propagator.step(state, src)
            if state.t_index == last - 1:
                before = state.p
        dq = self._propagator.crop(state.p - before) / (2 * self.h_t)
        return self.project(dq)

    def normal(self, f: np.ndarray) -> np.ndarray:
        return self.adjoint(self.forward(f))

    # -- inner products -------------------------------------------------------

    def inner_x(self, f1, f2) -> float:
        return float(np.sum(self._x_weight * f1 * f2))

    def norm_x(self, f) -> float:
        return float(np.sqrt(max(self.inner_x(f, f), 0.0)))

    def inner_y(self, g1, g2) -> float:
        return float(np.sum(self._y_weight * g1 * g2))

    def norm_y(self, g) -> float:
        return float(np.sqrt(max(self.inner_y(g, g), 0.0)))


def inner_X(f1, f2, medium: Medium) -> float:
    """``h^2 sum c^-2 f1 f2`` over the samples of the radius-0.9 ball."""
    grid = medium.grid
    mask = grid.omega0_mask()
    return float(grid.h ** 2 * np.sum(mask * f1 * f2 / medium.c ** 2))


def norm_X(f, medium: Medium) -> float:
    return float(np.sqrt(inner_X(f, f, medium)))


def inner_Y(g1, g2, sensors: SensorArray, h_t: float) -> float:
    """``h h_t sum chi g1 g2`` over sensors and time samples."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if g1.shape != g2.shape:
        raise ValueError("sinogram shapes differ")
    return float(sensors.grid.h * h_t * np.sum(sensors.chi[:, None] * g1 * g2))


def norm_Y(g, sensors: SensorArray, h_t: float) -> float:
    return float(np.sqrt(inner_Y(g, g, sensors, h_t)))


def dot_test(op, f, g) -> float:
    """Relative mismatch of the adjoint identity for one pair ``(f, g)``.

    ``|<Wf, g>_Y - <f, W*g>_X| / (|Wf| |g| + |f| |W*g|)``, or 0 when the
    denominator vanishes.
    """
    Wf = op.forward(f)
    Wsg = op.adjoint(g)
    lhs = op.inner_y(Wf, g)
    rhs = op.inner_x(f, Wsg)
    denom = op.norm_y(Wf) * op.norm_y(g) + op.norm_x(f) * op.norm_x(Wsg)
    if denom == 0.0:
        return 0.0
    return abs(lhs - rhs) / denom


class MatrixOperator:
    """Dense matrix with the same interface as :class:`PATOperator`.

    Both spaces carry the plain Euclidean inner product. Used for small
    surrogate problems and identity-operator denoising.
    """

    def __init__(self, A, domain_shape=None, spacing: float = 1.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        m, n = self.A.shape
        self.domain_shape = tuple(domain_shape) if domain_shape is not None else (n,)
        if int(np.prod(self.domain_shape)) != n:
            raise ValueError("domain_shape does not match the matrix columns")
        self.range_shape = (m,)
        self.spacing = float(spacing)
        self.cell_weight = 1.0

    @classmethod
    def identity(cls, n: int) -> "MatrixOperator":
        return cls(np.eye(n))

    def forward(self, f):
        return self.A @ np.asarray(f, dtype=float).ravel()

    def adjoint(self, g):
        return (self.A.T @ np.asarray(g, dtype=float)).reshape(self.domain_shape)

    def normal(self, f):
        return self.adjoint(self.forward(f))

    def project(self, f):
        return f

    def riesz(self, v):
        return v

    def inner_x(self, f1, f2) -> float:
        return float(np.vdot(f1, f2))

    def norm_x(self, f) -> float:
        return float(np.linalg.norm(f))

    def inner_y(self, g1, g2) -> float:
        return float(np.vdot(g1, g2))

    def norm_y(self, g) -> float:
        return float(np.linalg.norm(g))
