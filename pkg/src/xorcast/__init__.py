"""Tiered cache placement and cross-level XOR multicast delivery scheduling."""

from .analysis import (
    PopularityModel,
    average_rate,
    best_tiered_rate,
    naive_removal_rate,
    naive_sharing_rate,
    optimize_uncached,
    profile_distribution,
    zipf,
)
from .delivery import (
    FallbackRequired,
    build_schedule,
    count_messages_cl210,
    derive_cross_sets,
    rate_formula_cl21,
)
from .general import (
    assemble_schedule,
    enumerate_decomposable,
    rate_general,
    solve_decompositions_exact,
    solve_decompositions_greedy,
)
from .messages import DeliverySchedule, MulticastMessage
from .oracle import conventional_schedule, count_missing, simulate_and_decode
from .placement import (
    DemandClassification,
    Level,
    LibraryConfig,
    PlacementSpec,
    build_placement,
    classify_demand,
    group_library,
    low_level_owner,
)

__all__ = [
    "DeliverySchedule",
    "DemandClassification",
    "FallbackRequired",
    "Level",
    "LibraryConfig",
    "MulticastMessage",
    "PlacementSpec",
    "PopularityModel",
    "assemble_schedule",
    "average_rate",
    "best_tiered_rate",
    "build_placement",
    "build_schedule",
    "classify_demand",
    "conventional_schedule",
    "count_messages_cl210",
    "count_missing",
    "derive_cross_sets",
    "enumerate_decomposable",
    "group_library",
    "low_level_owner",
    "naive_removal_rate",
    "naive_sharing_rate",
    "optimize_uncached",
    "profile_distribution",
    "rate_formula_cl21",
    "rate_general",
    "simulate_and_decode",
    "solve_decompositions_exact",
    "solve_decompositions_greedy",
    "zipf",
]

__version__ = "0.1.0"
