"""End-to-end experiment driver: data simulation, noise, reconstruction, export.

Configuration is a flat ``key = value`` text file (``#`` starts a comment).
Recognised keys and defaults are the fields of :class:`ExperimentConfig`.
"""
from __future__ import annotations

import configparser
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .grid import (DEFAULT_DAMPING, DEFAULT_EDGE, DEFAULT_SPEED, Grid2D,
                   boundary_sensors, default_phantom_primitives, make_grid,
                   make_medium, make_phantom)
from .metrics import add_noise, rel_error
from .operators import PATOperator, dot_test
from .solvers import StopRule, cgne, landweber, steepest_descent
from .variational import h1_reconstruct, tv_reconstruct

logger = logging.getLogger(__name__)

METHODS = ("landweber", "sd", "cg", "h1", "tv")
_ALIASES = {"cgne": "cg", "steepest_descent": "sd", "lw": "landweber"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _medium_value(text):
    if isinstance(text, (int, float)):
        return float(text)
    if text == "default":
        return text
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"medium field must be 'default' or a number, got {text!r}") from None


@dataclass
class ExperimentConfig:
    """All parameters of one experiment; see the module docstring."""

    n_omega: int = 101
    oversize: int = 2
    speed: object = "default"
    damping: object = "default"
    phantom: str = "default"
    phantom_edge: float = DEFAULT_EDGE
    sensors: str = "full"
    threshold: float = -0.25
    T: float = 2.5
    nt: int = 251
    method: str = "cg"
    lam: float | None = None
    balance: float = 1.0
    gamma: float | None = None
    max_iters: int = 40
    noise: float = 0.59
    noise_seed: int = 0
    stop: str = "max_iters"
    tau: float = 1.5
    data_grid: str = "fine"
    output: str | None = None
    phantom_file: str | None = None
    trials: int = 10
    seed: int = 0

    _KEYS = {"lambda": "lam"}

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        names = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for key, raw in mapping.items():
            name = cls._KEYS.get(key, key).replace("-", "_")
            if name not in names:
                raise ConfigError(f"unknown configuration key {key!r}")
            values[name] = raw
        cfg = cls()
        for name, raw in values.items():
            setattr(cfg, name, _coerce(names[name], raw))
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(read_config(path))

    def replace(self, **changes) -> "ExperimentConfig":
        names = {f.name: f for f in dataclasses.fields(self)}
        coerced = {k: _coerce(names[k], v) for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **coerced)

    def validate(self) -> "ExperimentConfig":
        """Check every parameter before any computation starts."""
        self.method = _ALIASES.get(self.method, self.method)
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method in ("h1", "tv"):
            if self.lam is None:
                raise ConfigError(f"method {self.method} needs lambda")
            if self.lam < 0 or (self.method == "tv" and self.lam == 0):
                raise ConfigError(f"invalid lambda {self.lam}")
        if self.n_omega < 3 or self.n_omega % 2 == 0:
            raise ConfigError(f"n_omega must be odd and >= 3, got {self.n_omega}")
        if self.oversize < 2:
            raise ConfigError("oversize must be an integer >= 2")
        if self.sensors not in ("full", "half_plane"):
            raise ConfigError(f"sensors must be full or half_plane, got {self.sensors!r}")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.nt < 2:
            raise ConfigError("nt must be at least 2")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative")
        if self.noise < 0:
            raise ConfigError("noise must be nonnegative")
        if self.stop not in ("max_iters", "discrepancy"):
            raise ConfigError(f"stop must be max_iters or discrepancy, got {self.stop!r}")
        if self.stop == "discrepancy":
            if not self.tau > 1:
                raise ConfigError("tau must exceed 1")
            if self.method == "tv":
                raise ConfigError("the tv method runs a fixed number of iterations")
        if self.data_grid not in ("fine", "same"):
            raise ConfigError("data_grid must be fine or same")
        if self.phantom not in ("default", "file"):
            raise ConfigError("phantom must be default or file")
        if self.phantom == "file" and not self.phantom_file:
            raise ConfigError("phantom=file needs phantom_file")
        if self.phantom_edge < 0:
            raise ConfigError("phantom_edge must be nonnegative")
        if self.balance < 0:
            raise ConfigError("balance must be nonnegative")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        _medium_value(self.speed)
        _medium_value(self.damping)
        return self

    # -- builders -------------------------------------------------------------

    def grid(self) -> Grid2D:
        return make_grid(self.n_omega, self.oversize)

    def medium(self, grid: Grid2D):
        speed = _medium_value(self.speed)
        damping = _medium_value(self.damping)
        return make_medium(grid,
                           DEFAULT_SPEED if speed == "default" else speed,
                           DEFAULT_DAMPING if damping == "default" else damping)

    def sensor_array(self, grid: Grid2D):
        threshold = self.threshold if self.sensors == "half_plane" else None
        return boundary_sensors(grid, self.sensors, threshold)

    def phantom_values(self, grid: Grid2D) -> np.ndarray:
        if self.phantom == "file":
            values, _ = io.read_field(self.phantom_file)
            if values.shape != grid.shape:
                raise ConfigError(
                    f"phantom file has shape {values.shape}, grid is {grid.shape}")
            return values
        return make_phantom(grid, default_phantom_primitives(self.phantom_edge)).values

    def operator(self, grid: Grid2D | None = None, nt: int | None = None) -> PATOperator:
        grid = grid or self.grid()
        return PATOperator(self.medium(grid), self.sensor_array(grid),
                           nt or self.nt, self.T)


def _coerce(f: dataclasses.Field, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("none", ""):
        return None
    kind = str(f.type)
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"{f.name}: cannot parse {text!r}") from None
    return text


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file into a dict of strings."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + Path(path).read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["experiment"])


# -- data -----------------------------------------------------------------------

def restrict_sinogram(fine: np.ndarray, coarse_count: int) -> np.ndarray:
    """Fine-grid boundary data to the coarse sensor ring and time grid.

    Fine ring pixel ``2j`` coincides with coarse sensor ``j``; its value
    and its two ring neighbours are combined with weights 1/4, 1/2, 1/4.
    Every second time sample is kept.
    """
    fine = np.asarray(fine, dtype=float)
    m = fine.shape[0]
    if m != 2 * coarse_count:
        raise ValueError(f"fine ring has {m} pixels, expected {2 * coarse_count}")
    if fine.shape[1] % 2 == 0:
        raise ValueError("fine sinogram needs an odd number of time samples")
    idx = 2 * np.arange(coarse_count)
    ring = 0.25 * fine[(idx - 1) % m] + 0.5 * fine[idx] + 0.25 * fine[(idx + 1) % m]
    return ring[:, ::2]


@dataclass
class Dataset:
    operator: PATOperator
    truth: np.ndarray
    clean: np.ndarray
    data: np.ndarray
    delta: float


def simulate_data(cfg: ExperimentConfig, fine: bool | None = None) -> np.ndarray:
    """Exact data on the reconstruction sensors, simulated per ``data_grid``."""
    fine = cfg.data_grid == "fine" if fine is None else fine
    grid = cfg.grid()
    if cfg.phantom == "file" and fine:
        raise ConfigError("a phantom file only defines the reconstruction grid; "
                          "use data_grid = same")
    if not fine:
        op = cfg.operator(grid)
        return op.forward(cfg.phantom_values(grid))
    fine_grid = grid.refine()
    fine_op = cfg.operator(fine_grid, 2 * (cfg.nt - 1) + 1)
    g = fine_op.forward(cfg.phantom_values(fine_grid))
    coarse_count = 4 * (cfg.n_omega - 1)
    return restrict_sinogram(g, coarse_count) * cfg.sensor_array(grid).chi[:, None]


def prepare_dataset(cfg: ExperimentConfig) -> Dataset:
    cfg.validate()
    grid = cfg.grid()
    op = cfg.operator(grid)
    truth = op.project(cfg.phantom_values(grid))
    clean = simulate_data(cfg)
    # unobserved sensors carry neither signal nor noise
    data, _ = add_noise(clean, cfg.noise, cfg.noise_seed, mask=op.sensors.chi[:, None])
    # the discrepancy level is the injected noise in the data-space norm
    delta = op.norm_y(data - clean)
    return Dataset(op, truth, clean, data, delta)


def reconstruct(op: PATOperator, g: np.ndarray, cfg: ExperimentConfig,
                delta: float | None = None, truth=None):
    """Run the configured method; returns ``(image, log)``."""
    cfg.validate()
    if cfg.stop == "discrepancy":
        if delta is None:
            raise ConfigError("discrepancy stopping needs the noise level")
        stop = StopRule.discrepancy(delta, cfg.tau, cfg.max_iters)
    else:
        stop = StopRule.max_iters(cfg.max_iters)
    if cfg.method == "cg":
        return cgne(op, g, stop, truth)
    if cfg.method == "sd":
        return steepest_descent(op, g, stop, truth)
    if cfg.method == "landweber":
        return landweber(op, g, cfg.gamma, stop, truth)
    if cfg.method == "h1":
        return h1_reconstruct(op, g, cfg.lam, stop, truth)
    return tv_reconstruct(op, g, cfg.lam, cfg.max_iters, truth, balance=cfg.balance)


@dataclass
class ExperimentResult:
    image: np.ndarray
    log: object
    rel_error: float
    rel_residual: float
    delta: float
    files: dict = field(default_factory=dict)


def run_experiment(cfg: ExperimentConfig, echo=print) -> ExperimentResult:
    """Simulate, perturb, reconstruct and export one experiment."""
    ds = prepare_dataset(cfg)
    image, log = reconstruct(ds.operator, ds.data, cfg, ds.delta, ds.truth)
    err = rel_error(image, ds.truth)
    res = float(log.column("rel_residual")[-1])
    result = ExperimentResult(image, log, err, res, ds.delta)
    if cfg.output:
        result.files = export(cfg, ds, image, log)
    if echo is not None:
        echo(f"method={cfg.method} iterations={log.iterations} "
             f"rel_error={err:.6f} rel_residual={res:.6f}")
    return result


def export(cfg: ExperimentConfig, ds: Dataset, image, log) -> dict:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    h = ds.operator.grid.h
    files = {
        "phantom": out / "phantom.patf",
        "reconstruction": out / "reconstruction.patf",
        "sinogram": out / "sinogram.pats",
        "log": out / "log.csv",
        "phantom_pgm": out / "phantom.pgm",
        "reconstruction_pgm": out / "reconstruction.pgm",
        "sinogram_pgm": out / "sinogram.pgm",
    }
    io.write_field(files["phantom"], ds.truth, h)
    io.write_field(files["reconstruction"], image, h)
    io.write_sinogram(files["sinogram"], ds.data, ds.operator.h_t)
    log.to_csv(files["log"], objective=cfg.method in ("h1", "tv"))
    lo, hi = float(ds.truth.min()), float(ds.truth.max())
    io.write_pgm(files["phantom_pgm"], ds.truth, lo, hi)
    io.write_pgm(files["reconstruction_pgm"], image, lo, hi)
    io.write_pgm(files["sinogram_pgm"], ds.data, image_axes=False)
    return files


# -- adjoint check ----------------------------------------------------------------

def adjoint_test(cfg: ExperimentConfig, trials: int | None = None, seed: int | None = None,
                 zero_data: bool = False, echo=print):
    """Dot-product mismatches of ``W`` and ``W*`` for random image/data pairs.

    Images are white noise on the support ball, data are white noise on
    the observed sensors. Returns the list of mismatches.
    """
    cfg.validate()
    trials = cfg.trials if trials is None else trials
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    op = cfg.operator()
    mismatches = []
    for k in range(trials):
        f = op.project(rng.standard_normal(op.domain_shape))
        g = np.zeros(op.range_shape) if zero_data else rng.standard_normal(op.range_shape)
        g *= op.sensors.chi[:, None]
        value = dot_test(op, f, g)
        mismatches.append(value)
        if echo is not None:
            echo(f"trial {k}: mismatch {value:.3e}")
    if echo is not None:
        echo(f"max mismatch {max(mismatches):.3e}")
    return mismatches
