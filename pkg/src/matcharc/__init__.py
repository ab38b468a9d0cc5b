"""Monitored matchgate/Clifford circuit simulator and analysis toolkit."""

__version__ = "0.1.0"

from .engine import CircuitConfig, run_trajectory, run_coupled, run_ensemble
from .tableau import StabilizerTableau
from .arcs import ArcConfiguration

__all__ = [
    "CircuitConfig", "run_trajectory", "run_coupled", "run_ensemble",
    "StabilizerTableau", "ArcConfiguration", "__version__",
]
