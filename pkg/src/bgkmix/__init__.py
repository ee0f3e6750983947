"""Two-species BGK mixture models: solver, estimate checks and macroscopic bridge."""
from __future__ import annotations

from .errors import BGKError
from .grid import GridConfig, PhaseGrid, build_grid
from .mixture import MixtureParameters, validate_params
from .solver import MaxwellianComponent, SimulationConfig, SolverState, initial_field, run_simulation

__all__ = [
    "BGKError", "GridConfig", "PhaseGrid", "build_grid", "MixtureParameters", "validate_params",
    "MaxwellianComponent", "SimulationConfig", "SolverState", "initial_field", "run_simulation",
]
