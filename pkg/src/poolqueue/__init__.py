"""Analytic solver, cost optimizer and simulator for a bulk-posting
contractor pool shared with a Poisson stream of customers."""

from .dist import (
    DETERMINISTIC,
    ERLANG,
    EXPONENTIAL,
    PostingDistribution,
    parse_distribution,
)
from .embedded import (
    EmbeddedSolution,
    ModelType,
    SystemParams,
    admission_P,
    admission_tpm,
    build_tpm,
    characteristic_root,
    embedded_P,
    infinite_queue_Q,
    model_type,
    stationary_vector,
    tpm_stationary_delta,
)
from .errors import NoRootError, NoValidPointError, PoolQueueError, TruncationError
from .limiting import (
    LADDER,
    RENEWAL,
    LimitingDistribution,
    bhat,
    g_vector,
    interval_occupancy,
    limiting_pi,
)
from .cost import (
    CostParams,
    ObjectiveBreakdown,
    OptimizationResult,
    SweepCell,
    capability,
    evaluate_cell,
    objective,
    optimize_v,
    solve_instance,
    sweep,
)
from .sim import (
    CLIP,
    REJECT,
    ComparisonReport,
    SimConfig,
    SimResult,
    compare,
    run_sim,
    total_variation,
)

__version__ = "0.1.0"

__all__ = [
    "DETERMINISTIC",
    "ERLANG",
    "EXPONENTIAL",
    "PostingDistribution",
    "parse_distribution",
    "EmbeddedSolution",
    "ModelType",
    "SystemParams",
    "admission_P",
    "admission_tpm",
    "build_tpm",
    "characteristic_root",
    "embedded_P",
    "infinite_queue_Q",
    "model_type",
    "stationary_vector",
    "tpm_stationary_delta",
    "NoRootError",
    "NoValidPointError",
    "PoolQueueError",
    "TruncationError",
    "LADDER",
    "RENEWAL",
    "LimitingDistribution",
    "bhat",
    "g_vector",
    "interval_occupancy",
    "limiting_pi",
    "CostParams",
    "ObjectiveBreakdown",
    "OptimizationResult",
    "SweepCell",
    "capability",
    "evaluate_cell",
    "objective",
    "optimize_v",
    "solve_instance",
    "sweep",
    "CLIP",
    "REJECT",
    "ComparisonReport",
    "SimConfig",
    "SimResult",
    "compare",
    "run_sim",
    "total_variation",
    "__version__",
]
