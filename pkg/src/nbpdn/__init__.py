"""Distributed sparse recovery over networks.

Per-node penalized basis-pursuit denoising with neighbor blending through a
right-stochastic weight matrix, pruning variants using a known sparsity
level, a consensus-LASSO baseline, and brute-force verification of the
RIP/ROC-based error bounds.
"""

__version__ = "0.1.0"

from .algorithms import (
    AlgorithmConfig,
    DlassoParams,
    RunTrace,
    blend_neighbors,
    run_algorithm,
    run_bpdn,
    run_dlasso,
    run_nbpdn,
    run_pnbpdn,
)
from .instance import (
    InvalidSparsity,
    NodeObservation,
    ProblemInstance,
    SparseSignal,
    epsilon_for,
    generate_observations,
    generate_signal,
)
from .network import (
    ConnectivityFailure,
    InfeasibleDegree,
    NetworkMatrix,
    NetworkTopology,
    build_network_matrix,
    generate_topology,
    identity_matrix,
)
from .solver import (
    BpdnNodeSolver,
    DimensionMismatch,
    PenalizedBpdnProblem,
    SolveReport,
    SolverConfig,
    block_shrink,
    project_ball,
    prune_ls,
    soft_threshold,
    solve_penalized_bpdn,
    supp,
)
from .metrics import (
    MetricSeries,
    build_metric_series,
    msenr,
    support_recovery_rate,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    InstanceSpec,
    NetworkSpec,
    load_config,
    load_preset,
    run_experiment,
)
