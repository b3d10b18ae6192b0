"""
oneway - one-way quantum computation on two-photon four-qubit cluster states.

Builds the four-qubit chain cluster in its photonic encodings, runs adaptive
measurement patterns with Pauli-frame feed-forward, and scores the rotation,
C-NOT and C-Phase protocols against their closed forms, with or without noise.
"""

__version__ = "0.1.0"
__license__ = "MIT"

from .cluster import GraphSpec, OrderingMap, build_cluster, get_ordering, to_lab
from .config import ConfigManager, RunConfig
from .mbqc import Pattern, run_pattern
from .noise import NoiseSpec, run_pattern_dm
from .protocols import run_cnot, run_cphase, run_rotation

__all__ = [
    "ConfigManager",
    "GraphSpec",
    "NoiseSpec",
    "OrderingMap",
    "Pattern",
    "RunConfig",
    "build_cluster",
    "get_ordering",
    "run_cnot",
    "run_cphase",
    "run_pattern",
    "run_pattern_dm",
    "run_rotation",
    "to_lab",
    "__version__",
]
