"""Explicit finite-volume simulator for nonlocal ternary phase separation with evaporation."""

from ._kernels import BACKEND
from .dynamics import (
    EvapKind,
    EvaporationModel,
    PhysicsParams,
    TimeParams,
    auto_dt,
    evaporation_rate,
    simulate,
    step_explicit,
)
from .errors import (
    BlowUpError,
    ConfigError,
    InitializationError,
    KernelSymmetryError,
    NLPSError,
    SnapshotFormatError,
    SpecMismatchError,
)
from .grid import Field, GridSpec, State, make_grid, random_ternary_init, sample_field, wrap_index
from .kernel import KernelGrids, KernelSpec, make_bump_kernel, sample_kernel_grids
from .spectral import ConvolutionPlan, Which, convolve, convolve_direct, plan_convolution

__version__ = "0.1.0"
