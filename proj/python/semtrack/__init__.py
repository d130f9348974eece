"""Online tracking of time-varying SEM topologies with dynamic regret analysis."""

from ._core import (
    AlgoConfig,
    AssumptionViolated,
    ConfigError,
    DegenerateData,
    DimensionMismatch,
    GeneratorConfig,
    IoError,
    NoConsistentPattern,
    NonFiniteValue,
    Regime,
    SingularSystem,
    SolverOptions,
    Tracker,
    analyze_stream,
    build_regressor,
    exact_oracle,
    path_length,
    prox_partial_l1,
    regret_constant,
    resolve_alpha,
    run_experiment,
    simulate,
    soft_threshold,
    solve_comparator,
    spectral_radius,
)

__all__ = [name for name in dir() if not name.startswith("_")]
