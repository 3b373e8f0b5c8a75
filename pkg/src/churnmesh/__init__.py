"""Seed-reproducible simulator of dynamic wireless mesh topologies under churn."""

from .core import (
    Agent,
    ConfigError,
    Kind,
    LedgerDriftError,
    LinkResult,
    Network,
    Params,
    UnknownAgentError,
    analytic_degree_q0,
    pair_power,
)
from .engine import SimState, bootstrap, churn_step, pick_candidate, run_steps, satisfy_deficits
from .metrics import (
    DisconnectedError,
    MetricsSample,
    avg_distance_and_diameter,
    connectivity_transform,
    degree_and_power_stats,
    hop_distances,
    is_connected,
    power_efficiency_rho,
    robustness_deltas,
)
from .snapshot import CorruptSnapshotError, export_snapshot, import_snapshot
from .spatial import GridIndex
from .spectral import SpectralResult, spectral_gap
from .sweep import (
    ALL_METRICS,
    RunResult,
    SweepResult,
    SweepSpec,
    derive_seed,
    run_single,
    run_sweep,
    sweep_csv,
    write_sweep_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
