"""Photoacoustic tomography in damped heterogeneous media.

k-space wave simulation, the data map and its adjoint, iterative solvers
(Landweber, steepest descent, CGNE) and penalised reconstruction
(quadratic gradient penalty, total variation).
"""
from .grid import (Bump, Disk, FieldSpec, Grid2D, Medium, ScalarField,
                   SensorArray, boundary_ring, boundary_sensors,
                   default_phantom_primitives, make_grid, make_medium,
                   make_phantom)
from .kspace import InstabilityError, Propagator, WaveState, init_state, make_kernel, simulate, step
from .metrics import add_noise, rel_error, rel_residual
from .operators import (MatrixOperator, PATOperator, Sinogram, dot_test,
                        inner_X, inner_Y, norm_X, norm_Y)
from .solvers import (BreakdownError, IterationLog, NotReached, StepSizeError,
                      StopRule, cgne, discrepancy_stop, landweber,
                      steepest_descent)
from .variational import (ImageGradient, div_adj, grad, h1_reconstruct,
                          operator_norm, project_dual, tv_reconstruct)
from .estimators import Reconstructor

__version__ = "0.1.0"

__all__ = [
    "Bump", "Disk", "FieldSpec", "Grid2D", "Medium", "ScalarField", "SensorArray",
    "boundary_ring", "boundary_sensors", "default_phantom_primitives", "make_grid",
    "make_medium", "make_phantom",
    "InstabilityError", "Propagator", "WaveState", "init_state", "make_kernel",
    "simulate", "step",
    "add_noise", "rel_error", "rel_residual",
    "MatrixOperator", "PATOperator", "Sinogram", "dot_test", "inner_X", "inner_Y",
    "norm_X", "norm_Y",
    "BreakdownError", "IterationLog", "NotReached", "StepSizeError", "StopRule",
    "cgne", "discrepancy_stop", "landweber", "steepest_descent",
    "ImageGradient", "div_adj", "grad", "h1_reconstruct", "operator_norm",
    "project_dual", "tv_reconstruct",
    "Reconstructor",
]
