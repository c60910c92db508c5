"""
Apprenticeship-learning baselines: projection method and MWAL
"""

from src.baselines.common import (
    BaselineConfig,
    BaselineResult,
    IterationRecord,
    feature_expectation,
    resolve_bounds,
)
from src.baselines.mwal import mwal_gain, mwal_infer, mwal_update
from src.baselines.projection import pm_infer

METHODS = {"pm": pm_infer, "mwal": mwal_infer}

__all__ = [
    "METHODS",
    "BaselineConfig",
    "BaselineResult",
    "IterationRecord",
    "feature_expectation",
    "mwal_gain",
    "mwal_infer",
    "mwal_update",
    "pm_infer",
    "resolve_bounds",
]
