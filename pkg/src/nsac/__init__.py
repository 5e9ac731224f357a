"""Variable-density Navier-Stokes / Allen-Cahn solver on a MAC grid with a spectral Galerkin harness."""
from .config import Config, load_config, parse_config, serialize
from .core import GridSpec, MacField, MaterialLaws, State
from .diagnostics import (DiagRecord, budget_rho_chi, decay_fit, diag_record, energy_budget,
                          ws_distance)
from .errors import ConfigurationError, DomainError, NSACError, SolverError, StepSizeError
from .stepper import RunOutput, cfl_dt, run, step

__all__ = [
    "Config", "load_config", "parse_config", "serialize",
    "GridSpec", "MacField", "MaterialLaws", "State",
    "DiagRecord", "budget_rho_chi", "decay_fit", "diag_record", "energy_budget", "ws_distance",
    "ConfigurationError", "DomainError", "NSACError", "SolverError", "StepSizeError",
    "RunOutput", "cfl_dt", "run", "step",
]
