"""Low-rank CPD deconvolution of hyperspectral cubes."""

from .tensor_model import (
    CpdFactors,
    DimensionMismatch,
    HsiCube,
    parameter_count,
    reconstruct_cube,
    reconstruct_slice,
)
from .fourier_conv import KernelBank, center_and_pad, convolve, residual_term
from .objective import (
    RegWeights,
    full_objective,
    grad_a,
    grad_b,
    grad_c,
    smooth_f,
    tv_norm,
)
from .prox import project_nonneg, prox_tv_1d, prox_tv_columns
from .palm import (
    BacktrackError,
    SolveReport,
    SolverConfig,
    backtrack_ls,
    initialize_factors,
    solve,
)
from .sim import (
    DegradationSpec,
    degrade,
    gaussian_kernel,
    psnr,
    rmse,
    synth_lowrank,
)

__all__ = [
    "BacktrackError",
    "CpdFactors",
    "DegradationSpec",
    "DimensionMismatch",
    "HsiCube",
    "KernelBank",
    "RegWeights",
    "SolveReport",
    "SolverConfig",
    "backtrack_ls",
    "center_and_pad",
    "convolve",
    "degrade",
    "full_objective",
    "gaussian_kernel",
    "grad_a",
    "grad_b",
    "grad_c",
    "initialize_factors",
    "parameter_count",
    "project_nonneg",
    "prox_tv_1d",
    "prox_tv_columns",
    "psnr",
    "reconstruct_cube",
    "reconstruct_slice",
    "residual_term",
    "rmse",
    "smooth_f",
    "solve",
    "synth_lowrank",
    "tv_norm",
]
