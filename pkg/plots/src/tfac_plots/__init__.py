"""Figure scripts for variable-step L1 Allen-Cahn run artifacts.

Pure readers of the solver's records CSV and snapshot files; no physics is
recomputed here.
"""

__version__ = "0.1.0"

from tfac_plots.artifacts import ArtifactError, RunArtifacts
from tfac_plots.figures import plot_energy, plot_snapshots

__all__ = ["__version__", "ArtifactError", "RunArtifacts", "plot_energy", "plot_snapshots"]
