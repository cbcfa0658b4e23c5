"""Variable-step L1 solver for the time-fractional Allen-Cahn equation.

Subpackages: kernel machinery (L1/DOC/DCC rows and identities), time meshes,
the 2D periodic grid, the implicit stepper, energy monitors, and the CLI
experiment drivers.
"""

__version__ = "0.1.0"

from tfac.kernels import HAVE_COMPILED, KernelWorkspace, omega
from tfac.mesh import (
    AdaptiveConfig,
    TimeMesh,
    example1_mesh,
    graded_mesh,
    solvability_cap,
    uniform_mesh,
)
from tfac.grid import Grid2D
from tfac.stepper import ManufacturedCase, ModelParams, RunConfig, run

__all__ = [
    "__version__",
    "HAVE_COMPILED",
    "KernelWorkspace",
    "omega",
    "TimeMesh",
    "AdaptiveConfig",
    "graded_mesh",
    "example1_mesh",
    "uniform_mesh",
    "solvability_cap",
    "Grid2D",
    "ModelParams",
    "ManufacturedCase",
    "RunConfig",
    "run",
]
