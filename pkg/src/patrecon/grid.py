"""Grids, scalar fields, media, phantoms and boundary sensor geometry.

Arrays are indexed ``values[ix, iy]`` with ``x`` along axis 0 and ``y``
along axis 1. The physical domain ``[-1, 1]^2`` sits in the middle of a
larger periodic computational square ``[-extent, extent]^2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

#: Radius of the disk that must contain the support of the initial pressure.
OMEGA0_RADIUS = 0.9


@dataclass(frozen=True)
class Grid2D:
    """Uniform square grid.

    Parameters
    ----------
    nx, ny : int
        Samples per axis.
    h : float
        Grid spacing.
    extent : float
        Half width of the computational square.
    n_omega : int
        Samples per side of the physical domain ``[-1, 1]^2``.
    """

    nx: int
    ny: int
    h: float
    extent: float
    n_omega: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def origin(self) -> tuple[float, float]:
        return (-self.extent, -self.extent)

    @property
    def omega_offset(self) -> int:
        """Index of the first sample of ``[-1, 1]`` along either axis."""
        return (self.nx - self.n_omega) // 2

    @property
    def period(self) -> tuple[int, int]:
        """Samples per period of the torus the grid is wrapped on.

        When the axis runs from ``-extent`` to ``+extent`` inclusive the two
        end samples are the same point of the periodic domain.
        """
        closed = abs((self.nx - 1) * self.h - 2 * self.extent) <= 1e-9 * self.extent
        return (self.nx - 1, self.ny - 1) if closed else (self.nx, self.ny)

    def axis(self) -> np.ndarray:
        return -self.extent + self.h * np.arange(self.nx)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")

    def omega0_mask(self) -> np.ndarray:
        X, Y = self.mesh()
        # tolerance keeps samples that sit on the circle up to rounding
        return (np.hypot(X, Y) <= OMEGA0_RADIUS + 1e-12).astype(float)

    def refine(self) -> "Grid2D":
        """Grid with half the spacing covering the same square."""
        return make_grid(2 * self.n_omega - 1, int(round(self.extent)))


def make_grid(n_omega: int, oversize_factor: int = 2) -> Grid2D:
    """Build the computational grid around ``[-1, 1]^2``.

    ``n_omega`` must be odd so that the boundary of the physical domain
    and the origin land on grid samples.

    >>> g = make_grid(201, 2)
    >>> g.nx, round(g.h, 12), g.extent
    (401, 0.01, 2)
    """
    if int(n_omega) != n_omega or n_omega < 3:
        raise ValueError(f"n_omega must be an integer >= 3, got {n_omega}")
    if n_omega % 2 == 0:
        raise ValueError(f"n_omega must be odd, got {n_omega}")
    if int(oversize_factor) != oversize_factor or oversize_factor < 2:
        raise ValueError(
            f"oversize_factor must be an integer >= 2, got {oversize_factor}")
    n_omega = int(n_omega)
    oversize_factor = int(oversize_factor)
    h = 2.0 / (n_omega - 1)
    n = oversize_factor * (n_omega - 1) + 1
    return Grid2D(nx=n, ny=n, h=h, extent=oversize_factor, n_omega=n_omega)


@dataclass(frozen=True)
class ScalarField:
    """A real function sampled on a :class:`Grid2D`."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", values)


# -- primitives ---------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    """Disk of height ``amplitude``, optionally with a soft rim.

    With ``edge > 0`` the profile falls from ``amplitude`` to 0 along a
    half cosine on ``radius - edge <= rho <= radius + edge``; ``edge = 0``
    gives the indicator of the closed disk.
    """

    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0
    edge: float = 0.0

    @property
    def reach(self) -> float:
        return self.radius + self.edge

    def sample(self, X, Y):
        rho = np.hypot(X - self.center[0], Y - self.center[1])
        if self.edge <= 0:
            return np.where(rho <= self.radius, float(self.amplitude), 0.0)
        s = np.clip((rho - self.radius) / self.edge, -1.0, 1.0)
        return self.amplitude * 0.5 * (1.0 - np.sin(0.5 * np.pi * s))


@dataclass(frozen=True)
class Bump:
    """C-infinity bump ``amp * exp(1 - 1 / (1 - rho^2))`` on ``rho < 1``."""

    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0

    @property
    def reach(self) -> float:
        return self.radius

    def sample(self, X, Y):
        rho2 = ((X - self.center[0]) ** 2 + (Y - self.center[1]) ** 2) / self.radius ** 2
        out = np.zeros_like(rho2)
        inside = rho2 < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
        return out


Primitive = Union[Disk, Bump]


def _check_primitive(p: Primitive) -> None:
    if p.radius <= 0:
        raise ValueError(f"primitive radius must be positive: {p}")
    if getattr(p, "edge", 0.0) < 0 or getattr(p, "edge", 0.0) > p.radius:
        raise ValueError(f"disk edge must lie in [0, radius]: {p}")


def make_phantom(grid: Grid2D, primitives: Sequence[Primitive] = ()) -> ScalarField:
    """Sum of disks and bumps sampled on ``grid``.

    Every primitive must lie inside the ball of radius 0.9 around the origin.
    """
    X, Y = grid.mesh()
    values = np.zeros(grid.shape)
    for p in primitives:
        _check_primitive(p)
        if np.hypot(*p.center) + p.reach > OMEGA0_RADIUS + 1e-12:
            raise ValueError(
                f"primitive {p} extends outside the radius-{OMEGA0_RADIUS} ball")
        values += p.sample(X, Y)
    return ScalarField(grid, values)


DEFAULT_EDGE = 0.04


def default_phantom_primitives(edge: float = DEFAULT_EDGE) -> tuple[Primitive, ...]:
    """Test phantom of four soft-rimmed disks used by the experiments."""
    return (
        Disk((-0.30, 0.15), 0.30, 1.0, edge),
        Disk((0.35, -0.30), 0.22, 0.7, edge),
        Disk((0.30, 0.40), 0.15, 0.5, edge),
        Disk((-0.25, -0.45), 0.12, 0.8, edge),
    )


# -- media --------------------------------------------------------------------

@dataclass(frozen=True)
class FieldSpec:
    """Constant background plus a sum of smooth bumps."""

    base: float
    bumps: tuple[Bump, ...] = ()

    def sample(self, grid: Grid2D) -> np.ndarray:
        X, Y = grid.mesh()
        values = np.full(grid.shape, float(self.base))
        for b in self.bumps:
            values += b.sample(X, Y)
        return values


DEFAULT_SPEED = FieldSpec(1.0, (Bump((0.3, 0.0), 0.4, 0.2),))
DEFAULT_DAMPING = FieldSpec(0.0, (Bump((-0.2, 0.1), 0.5, 0.5),))


@dataclass(frozen=True)
class Medium:
    """Sound speed ``c`` and damping ``a`` on a grid.

    The reference speed of the k-space scheme is ``c0 = c_plus = max(c)``.
    """

    grid: Grid2D
    c: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if c.shape != self.grid.shape or a.shape != self.grid.shape:
            raise ValueError("medium arrays must match the grid shape")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a))):
            raise ValueError("medium contains non-finite values")
        if c.min() <= 0:
            raise ValueError(f"sound speed must be positive, min(c) = {c.min()}")
        if a.min() < 0:
            raise ValueError(f"damping must be nonnegative, min(a) = {a.min()}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)

    @property
    def c_plus(self) -> float:
        return float(self.c.max())

    @property
    def c0(self) -> float:
        return self.c_plus

    @property
    def is_homogeneous(self) -> bool:
        return bool(np.all(self.c == self.c0))


def make_medium(grid: Grid2D, c_spec: FieldSpec | float = DEFAULT_SPEED,
                a_spec: FieldSpec | float = DEFAULT_DAMPING) -> Medium:
    """Sample speed and damping specs on ``grid``; floats mean constants."""
    if not isinstance(c_spec, FieldSpec):
        c_spec = FieldSpec(float(c_spec))
    if not isinstance(a_spec, FieldSpec):
        a_spec = FieldSpec(float(a_spec))
    return Medium(grid, c_spec.sample(grid), a_spec.sample(grid))


# -- sensors ------------------------------------------------------------------

@dataclass(frozen=True)
class SensorArray:
    """Boundary pixels of ``[-1, 1]^2`` in counterclockwise order.

    ``positions`` holds ``(ix, iy)`` grid indices, ``chi`` the 0/1 window.
    """

    grid: Grid2D
    positions: np.ndarray
    chi: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.positions)

    def coordinates(self) -> np.ndarray:
        return -self.grid.extent + self.grid.h * self.positions.astype(float)

    def sample(self, values: np.ndarray) -> np.ndarray:
        return values[self.positions[:, 0], self.positions[:, 1]]


def boundary_ring(grid: Grid2D) -> np.ndarray:
    """Indices of the boundary of ``[-1, 1]^2``, counterclockwise from (-1, -1).

    Each side is half open so every corner appears once.
    """
    lo = grid.omega_offset
    hi = lo + grid.n_omega - 1
    run = np.arange(lo, hi)
    bottom = np.stack([run, np.full_like(run, lo)], axis=1)
    right = np.stack([np.full_like(run, hi), run], axis=1)
    top = np.stack([run[::-1] + 1, np.full_like(run, hi)], axis=1)
    left = np.stack([np.full_like(run, lo), run[::-1] + 1], axis=1)
    return np.concatenate([bottom, right, top, left])


def boundary_sensors(grid: Grid2D, view: str = "full",
                     threshold: float | None = None) -> SensorArray:
    """Sensors on every boundary pixel, windowed by the requested view.

    ``view="half_plane"`` keeps the pixels whose x coordinate exceeds
    ``threshold``.
    """
    positions = boundary_ring(grid)
    if view == "full":
        chi = np.ones(len(positions))
    elif view == "half_plane":
        if threshold is None:
            raise ValueError("half_plane view needs a threshold")
        x = -grid.extent + grid.h * positions[:, 0]
        chi = (x > threshold).astype(float)
        if not chi.any():
            warnings.warn(f"half_plane({threshold}) observes no sensor",
                          stacklevel=2)
    else:
        raise ValueError(f"unknown view {view!r}")
    return SensorArray(grid, positions, chi)
