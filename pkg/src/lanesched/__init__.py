"""Lane-based intersection scheduling with A* search and admissible relaxation bounds."""
from .domain import (Cluster, ConnectionSequence, ControllerState, CyclePlan, Instance, StageDefinition,
                     ValidationError, Vehicle, build_clusters, min_switch, nearest_stage, validate_plan)
from .heuristics import eris_lower_bound, pdwspt_lower_bound, pdwspt_priority_sweep, zero_heuristic
from .instance_io import parse_instance, write_instance
from .oracle import brute_force_optimal
from .search import Schedule, SearchConfig, SearchStats, a_star, solve

__version__ = "0.1.0"

__all__ = [
    "Cluster", "ConnectionSequence", "ControllerState", "CyclePlan", "Instance", "StageDefinition",
    "ValidationError", "Vehicle", "build_clusters", "min_switch", "nearest_stage", "validate_plan",
    "eris_lower_bound", "pdwspt_lower_bound", "pdwspt_priority_sweep", "zero_heuristic",
    "parse_instance", "write_instance", "brute_force_optimal",
    "Schedule", "SearchConfig", "SearchStats", "a_star", "solve",
]
