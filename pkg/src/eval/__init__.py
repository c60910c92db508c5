"""
Accuracy metrics, timing benchmark and report emission
"""

from src.eval.benchmark import EvalConfig, benchmark, regime_name
from src.eval.metrics import (
    KL_EPSILON,
    improvement,
    kl_metric,
    mse_metric,
    oracle_utility_metric,
    utility_metric,
)
from src.eval.report import (
    METRICS_COLUMNS,
    TIMING_COLUMNS,
    EvalReport,
    MethodSummary,
    QueryRecord,
    check_direction,
    metrics_frame,
    summarise,
    timing_frame,
    write_report,
)

__all__ = [
    "KL_EPSILON",
    "METRICS_COLUMNS",
    "TIMING_COLUMNS",
    "EvalConfig",
    "EvalReport",
    "MethodSummary",
    "QueryRecord",
    "benchmark",
    "check_direction",
    "improvement",
    "kl_metric",
    "metrics_frame",
    "mse_metric",
    "oracle_utility_metric",
    "regime_name",
    "summarise",
    "timing_frame",
    "utility_metric",
    "write_report",
]
