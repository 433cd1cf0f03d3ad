"""Cascading-failure risk analysis for multi-layer LEO satellite networks."""

from .cascade import AttackScenario, Baseline, CascadeConfig, CascadeResult, run_cascade
from .config import SimConfig, load_config
from .orbital import EpochTime
from .topology import EdgeKind, NodeKind, Snapshot

__version__ = "0.1.0"

__all__ = [
    "AttackScenario",
    "Baseline",
    "CascadeConfig",
    "CascadeResult",
    "EdgeKind",
    "EpochTime",
    "NodeKind",
    "SimConfig",
    "Snapshot",
    "load_config",
    "run_cascade",
]
