"""Cube (unit hypercube) representations of trees within a constant factor of optimal cubicity."""
from __future__ import annotations

__version__ = "0.1.0"

from .tree import RootedTree, TreeFormatError, generate, parse_tree
from .metrics import BoundsReport, RhoResult, compute_rho, cubicity_lower_bound, dimension_budget
from .representation import CubeRepresentation, Violation, WeightAssignment, verify, verify_naive, verify_spatial
from .decomposition import Ladder, LevelFamilies, build_ladder, decompose, families
from .embedder import EmbedConfig, EmbedReport, EscalationExhausted, RetryExhausted, embed_tree
from .oracle import SmallGraph, exact_cubicity, proper_interval_supergraphs

__all__ = [
    "RootedTree", "TreeFormatError", "generate", "parse_tree",
    "BoundsReport", "RhoResult", "compute_rho", "cubicity_lower_bound", "dimension_budget",
    "CubeRepresentation", "Violation", "WeightAssignment", "verify", "verify_naive", "verify_spatial",
    "Ladder", "LevelFamilies", "build_ladder", "decompose", "families",
    "EmbedConfig", "EmbedReport", "EscalationExhausted", "RetryExhausted", "embed_tree",
    "SmallGraph", "exact_cubicity", "proper_interval_supergraphs",
]
