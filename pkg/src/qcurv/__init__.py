"""Radial prescribed Q-curvature solver with singular weights."""
from .diagnostics import (bol_verdict, curvature_density, farfield_slope, pohozaev_residual,
                          pohozaev_singular, total_curvature, total_volume)
from .kernel import (BACKEND, KernelMatrix, angular_log_average, apply_kernel, build_kernel,
                     cached_kernel, load_kernel, save_kernel)
from .model import (BolVerdict, CutoffConfig, DomainError, ModelParams, QuadratureError,
                    RadialField, RadialGrid, SolveReport, make_grid, make_params)
from .profiles import (Constant, Decay, InversePower, OnePlusL1, PiecewiseLinearFamily,
                       PowerSum, QProfile, SelfScaled, Tabulated, Tent, eval_q)
from .shooter import ShootResult, cross_validate, remark62_scan, shoot
from .solver import (FixedConstant, FixedOrigin, FixedVolume, SolverOptions, bubble,
                     continuation_solve, picard_step, solve_normal)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
