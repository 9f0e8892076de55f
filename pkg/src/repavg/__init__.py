"""Repeated random averaging: simulation, particle coupling and exact dynamics."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ChainParams,
    InitSpec,
    Metrics,
    State,
    Trajectory,
    apply_average,
    init_state,
    metrics,
    run_continuous,
    run_discrete,
    sample_pair,
    t_of_a,
)
