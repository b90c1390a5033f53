"""Simulator for a two-qubit autonomous thermal machine driving a two-qubit system.

Local Lindblad dynamics on a fixed 16-dimensional space plus the
thermodynamic and information-theoretic diagnostics of the machine cycles:
heats, effective and virtual temperatures, entropy production, trace-distance
backflow, mutual information, concurrence and coherence correlation.
"""

from .model import ConfigError, LAYOUT, ScenarioConfig, SystemLayout
from .dynamics import IntegrationFailure, Trajectory, evolve
from .qcore import DensityMatrix

__all__ = [
    "ConfigError",
    "DensityMatrix",
    "IntegrationFailure",
    "LAYOUT",
    "ScenarioConfig",
    "SystemLayout",
    "Trajectory",
    "evolve",
]

__version__ = "0.1.0"
