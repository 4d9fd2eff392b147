"""k-space time stepping for the damped wave equation.

Solves ``c^-2 p_tt + a p_t - Lap p = s`` with ``p(0) = f`` and
``p_t(0) = -c^2 a f`` on the periodic computational square. The speed
contrast and the damping are carried by two auxiliary fields: ``v`` and
``r = c0^2 a int_0^t p``, so that ``p = v + w - r`` while ``w`` obeys a
constant-speed wave equation that the spectral step integrates without
dispersion.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import fft

from .grid import Grid2D, Medium, SensorArray


class InstabilityError(FloatingPointError):
    """Raised when the propagated state stops being finite."""


@dataclass(frozen=True)
class SpectralKernel:
    """Fourier multipliers of one time step.

    ``prop_kernel = 4 sin^2(c0 |xi| h_t / 2)`` and
    ``src_kernel = (c0 h_t / 2)^2 sinc^2(c0 |xi| h_t / 2)`` on the full
    frequency grid of the grid period, in :func:`numpy.fft.fftfreq` order.
    """

    prop_kernel: np.ndarray
    src_kernel: np.ndarray
    c0: float
    h_t: float

    def half(self):
        """Multipliers restricted to the ``rfft2`` half spectrum."""
        m = self.prop_kernel.shape[1] // 2 + 1
        return self.prop_kernel[:, :m], self.src_kernel[:, :m]


def _kernel_arrays(shape, h, c0, h_t):
    kx = 2 * np.pi * np.fft.fftfreq(shape[0], d=h)
    ky = 2 * np.pi * np.fft.fftfreq(shape[1], d=h)
    xi = np.hypot(kx[:, None], ky[None, :])
    phase = 0.5 * c0 * xi * h_t
    prop = 4.0 * np.sin(phase) ** 2
    # np.sinc is the normalised sinc
    src = (0.5 * c0 * h_t) ** 2 * np.sinc(phase / np.pi) ** 2
    return prop, src


def make_kernel(grid: Grid2D, c0: float, h_t: float) -> SpectralKernel:
    prop, src = _kernel_arrays(grid.period, grid.h, c0, h_t)
    return SpectralKernel(prop, src, float(c0), float(h_t))


@dataclass(frozen=True)
class WaveState:
    """Rolling state of the k-space scheme at time ``t_index * h_t``."""

    w_curr: np.ndarray
    w_prev: np.ndarray
    v: np.ndarray
    r: np.ndarray
    p: np.ndarray
    t_index: int
    h_t: float

    @property
    def t(self) -> float:
        return self.t_index * self.h_t


def init_state(f: np.ndarray, medium: Medium, h_t: float) -> WaveState:
    """State at ``t = 0`` for initial pressure ``f``.

    ``w`` starts at rest: ``w - r = (c0/c)^2 p`` and ``r_t = c0^2 a p`` give
    ``w_t(0) = c0^2 a f - c0^2 a f = 0`` for ``p_t(0) = -c^2 a f``. The
    level ``w(-h_t)`` is set so that the first step is symmetric
    (``w(-h_t) = w(h_t)``), i.e. ``w_prev = w - IDFT[prop DFT[w + v]] / 2``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != medium.grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {medium.grid.shape}")
    return Propagator(medium, h_t).initial_state(f)


class Propagator:
    """Stepping coefficients for one medium and one time step.

    Parameters
    ----------
    medium : Medium
    h_t : float
        Time step.
    fft_pad : bool
        Extend the periodic working domain to the next fast FFT length.
        The extension repeats the edge values of ``c`` and ``a`` and only
        moves the periodic images further away.

    States live on the working array of shape ``self.shape``, which is the
    grid period (or its padded length); :meth:`crop` maps back to the grid.
    """

    def __init__(self, medium: Medium, h_t: float, fft_pad: bool = False):
        if h_t <= 0:
            raise ValueError(f"time step must be positive, got {h_t}")
        self.medium = medium
        self.h_t = float(h_t)
        self.grid_shape = medium.grid.shape
        period = medium.grid.period
        if fft_pad:
            self.shape = tuple(fft.next_fast_len(n, real=True) for n in period)
        else:
            self.shape = period
        # a closed grid whose period is not padded drops its duplicate
        # last row/column; otherwise the grid is embedded as a corner block
        self._wrap = self.shape != self.grid_shape and all(
            m < n for m, n in zip(self.shape, self.grid_shape))
        if not self._wrap:
            self._pad = [(0, m - n) for n, m in zip(self.grid_shape, self.shape)]
        prop, src = _kernel_arrays(self.shape, medium.grid.h, medium.c0, self.h_t)
        half = self.shape[1] // 2 + 1
        self._prop = prop[:, :half]
        # the factor 4 in front of the bracket multiplies the source too
        self._src = 4.0 * src[:, :half]
        c = self.pad(medium.c, mode="edge")
        a = self.pad(medium.a, mode="edge")
        self._ratio = (medium.c0 / c) ** 2
        self._speed_excess = (c / medium.c0) ** 2 - 1.0
        self._damp = medium.c0 ** 2 * a * self.h_t
        self._damped = bool(np.any(a != 0))

    def pad(self, x: np.ndarray, mode: str = "constant") -> np.ndarray:
        """Grid array to working array."""
        if x.shape == self.shape:
            return x
        if self._wrap:
            return np.ascontiguousarray(x[:self.shape[0], :self.shape[1]])
        return np.pad(x, self._pad, mode=mode)

    def crop(self, x: np.ndarray) -> np.ndarray:
        """Working array to grid array."""
        if self._wrap:
            return np.pad(x, [(0, n - m) for n, m in zip(self.grid_shape, self.shape)],
                          mode="wrap")
        nx, ny = self.grid_shape
        return x[:nx, :ny]

    def _apply_prop(self, x):
        return fft.irfft2(self._prop * fft.rfft2(x), s=self.shape)

    def initial_state(self, f: np.ndarray) -> WaveState:
        f = self.pad(np.asarray(f, dtype=float))
        w = self._ratio * f
        v = (1.0 - self._ratio) * f
        return WaveState(
            w_curr=w,
            w_prev=w - 0.5 * self._apply_prop(w + v),
            v=v,
            r=np.zeros_like(f),
            p=f.copy(),
            t_index=0,
            h_t=self.h_t,
        )

    def step(self, state: WaveState, source: Optional[np.ndarray] = None) -> WaveState:
        w, w_prev, v, r = state.w_curr, state.w_prev, state.v, state.r
        spec = fft.rfft2(w + v - r) * self._prop
        if source is not None:
            spec -= self._src * fft.rfft2(self.pad(source))
        w_next = 2.0 * w - w_prev - fft.irfft2(spec, s=self.shape)
        wr = w_next - r
        v_next = self._speed_excess * wr
        p_next = v_next + wr
        r_next = r + self._damp * p_next if self._damped else r
        if not np.isfinite(p_next).all():
            raise InstabilityError(
                f"non-finite pressure at time index {state.t_index + 1}")
        return WaveState(w_next, w, v_next, r_next, p_next,
                         state.t_index + 1, state.h_t)


def step(state: WaveState, medium: Medium, kernel: SpectralKernel,
         source: Optional[np.ndarray] = None) -> WaveState:
    """Advance ``state`` by one time step of ``kernel.h_t``.

    Convenience wrapper; loops should build a :class:`Propagator` once.
    """
    if kernel.prop_kernel.shape != medium.grid.period:
        raise ValueError("kernel was built for a different grid")
    if state.w_curr.shape != medium.grid.period:
        raise ValueError("state does not match the medium grid")
    if source is not None and np.shape(source) not in (medium.grid.shape,
                                                       medium.grid.period):
        raise ValueError("source slice does not match the grid")
    return Propagator(medium, kernel.h_t).step(state, source)


SourceProvider = Callable[[int], Optional[np.ndarray]]


def simulate(f: np.ndarray, medium: Medium, sensors: SensorArray, nt: int,
             h_t: float, source: SourceProvider | None = None,
             propagator: Propagator | None = None):
    """Run ``nt - 1`` steps and record ``p`` at every sensor.

    Returns ``(data, state)`` where ``data[s, k]`` is the pressure at sensor
    ``s`` and time ``k * h_t`` (column 0 is ``f`` itself) and ``state`` is
    the final :class:`WaveState`. ``source(n)`` gives the source slice used
    for the step from ``n`` to ``n + 1``, or ``None``.
    """
    if nt < 2:
        raise ValueError(f"need at least two time samples, got nt={nt}")
    if h_t <= 0:
        raise ValueError(f"time step must be positive, got {h_t}")
    if sensors.grid != medium.grid:
        raise ValueError("sensors and medium live on different grids")
    f = np.asarray(f, dtype=float)
    if f.shape != medium.grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {medium.grid.shape}")
    prop = propagator or Propagator(medium, h_t)
    state = prop.initial_state(f)
    ix, iy = sensors.positions[:, 0], sensors.positions[:, 1]
    data = np.empty((sensors.count, nt))
    data[:, 0] = state.p[ix, iy]
    for n in range(nt - 1):
        state = prop.step(state, None if source is None else source(n))
        data[:, n + 1] = state.p[ix, iy]
    return data, state
