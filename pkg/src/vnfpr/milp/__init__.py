"""Generic MILP modelling, an embedded LP/branch-and-bound solver and LP-file I/O."""

from .backends import EmbeddedBackend, ExternalBackend, get_backend
from .bnb import solve_lp, solve_mip
from .lpfile import export_lp_file, format_solution, import_solution, read_lp_file
from .model import (
    FEAS_TOL,
    INT_TOL,
    MilpModel,
    MipSolution,
    ModelError,
    Sense,
    SolverLimits,
    Status,
    VarKind,
    relax,
)

__all__ = [
    "EmbeddedBackend",
    "ExternalBackend",
    "FEAS_TOL",
    "INT_TOL",
    "MilpModel",
    "MipSolution",
    "ModelError",
    "Sense",
    "SolverLimits",
    "Status",
    "VarKind",
    "export_lp_file",
    "format_solution",
    "get_backend",
    "import_solution",
    "read_lp_file",
    "relax",
    "solve_lp",
    "solve_mip",
]
