"""Cache-aware adaptive streaming simulation at a wireless access point."""
from .ap_engine import SCHEMES, ApEngine, DeliveryEvent, SimulationResult
from .assign_core import (
    CandidateQuality,
    QualityRequest,
    SolverParams,
    build_candidates,
    delivery_cost,
    tolerated_set,
    utility,
)
from .buff import buff_assign
from .buffer_airtime import (
    AirtimeAllocation,
    BufferEstimateInput,
    ClientLoad,
    allocate_airtime,
    equal_airtime,
    estimate_buffer,
)
from .cache import LruChunkCache, OversizedObjectError
from .catalog import (
    Catalog,
    CatalogError,
    PopularityModel,
    QualityLadder,
    dump_trace_catalog,
    load_trace_catalog,
    make_synthetic_catalog,
    zipf_pmf,
)
from .client import ChunkRequest, DashClient, harmonic_mean_rate, select_quality
from .cli_metrics import (
    ScenarioConfig,
    load_config,
    mean_ci,
    oracle_check,
    run_replication,
    run_scenario,
    run_sweep,
    summarize,
    write_csv,
    write_json,
)
from .cph import (
    Assignment,
    AssignmentResult,
    SolveGroup,
    SolveItem,
    brute_force_assign,
    canonical_order,
    cph_assign,
    dump_instance,
    load_instance,
    pareto_min,
    solve_groups,
)
from .radio import RadioConfig, link_capacity_bps, path_loss_db, place_clients

__all__ = [
    "SCHEMES", "ApEngine", "DeliveryEvent", "SimulationResult",
    "CandidateQuality", "QualityRequest", "SolverParams", "build_candidates",
    "delivery_cost", "tolerated_set", "utility",
    "buff_assign",
    "AirtimeAllocation", "BufferEstimateInput", "ClientLoad",
    "allocate_airtime", "equal_airtime", "estimate_buffer",
    "LruChunkCache", "OversizedObjectError",
    "Catalog", "CatalogError", "PopularityModel", "QualityLadder",
    "dump_trace_catalog", "load_trace_catalog", "make_synthetic_catalog", "zipf_pmf",
    "ChunkRequest", "DashClient", "harmonic_mean_rate", "select_quality",
    "ScenarioConfig", "load_config", "mean_ci", "oracle_check",
    "run_replication", "run_scenario", "run_sweep", "summarize",
    "write_csv", "write_json",
    "Assignment", "AssignmentResult", "SolveGroup", "SolveItem",
    "brute_force_assign", "canonical_order", "cph_assign",
    "dump_instance", "load_instance", "pareto_min", "solve_groups",
    "RadioConfig", "link_capacity_bps", "path_loss_db", "place_clients",
]
