"""Simulation, estimation and goodness of fit for relational event histories."""

from .core import (
    ActorCovariates,
    ActorIndex,
    ActorModel,
    ConfigError,
    Covariates,
    DyadCovariates,
    DyadicModel,
    EffectSpec,
    Event,
    EventHistory,
    HistoryError,
    MemorySpec,
    ParamSchedule,
    RemsimError,
    RiskSet,
    SimConfig,
    SimulationError,
    make_rng,
    param_at,
    replicate_seed,
)
from .stats import StatsState, compute_stat, design_matrix
from .dyadic import next_event_distribution, simulate_dyadic, simulate_replicates
from .actor import receiver_distribution, simulate_actor
from .estimate import FitResult, loglik, mle, score
from .gof import FitIndexSpec, GofReport, gof_run, percentile_rank
from .scenario import (
    BEYOND,
    InterventionSpec,
    SweepGrid,
    SweepResult,
    TargetSpec,
    apply_intervention,
    run_sweep,
    select_targets,
)

__version__ = "0.1.0"
