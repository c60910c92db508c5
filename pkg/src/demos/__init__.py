"""
Demonstration generation, splitting and persistence
"""

from src.demos.dataset import (
    SPLITS,
    Demonstration,
    DemoSet,
    FeatureStats,
    feature_stats,
    generate_demos,
    noise_spec_for,
    split,
)
from src.demos.storage import load_demos, save_demos

__all__ = [
    "SPLITS",
    "DemoSet",
    "Demonstration",
    "FeatureStats",
    "feature_stats",
    "generate_demos",
    "load_demos",
    "noise_spec_for",
    "save_demos",
    "split",
]
