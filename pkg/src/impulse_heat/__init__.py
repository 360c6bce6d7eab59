"""Minimal-norm and minimal-time impulse control of the heat equation on boxes."""

from .errors import (
    ConfigurationError,
    ConsistencyError,
    ConvergenceError,
    DegenerateAdjointError,
    DegenerateProblemError,
    DomainError,
    ImpulseHeatError,
    InfeasibleError,
    OracleRefusal,
    TrivialProblemError,
    UsageError,
)
from .spectral import Domain, Eigenbasis, Region, RegionOperator, build_basis, region_gram, semigroup_apply
from .system import Condition, ControlSequence, ImpulseSchedule, ProblemConfig, evolve, free_decay_time
from .norm import NormOptions, NormSolution, dual_value, feasibility_check, solve_norm, solve_norm_restricted
from .mintime import PlateauTable, Regime, TimeSolution, minimal_time, plateau_table
from .pmp import bang_bang_check, max_principle_residual
from .configio import config_from_dict, example_config, load_config

__version__ = "0.1.0"
