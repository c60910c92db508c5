"""
Evaluation reports: per-query records, per-method aggregates and their emission

metrics.csv columns: environment, regime, method, demo_index, metric, value
timing.csv columns:  environment, regime, method, demo_index, seconds
"""

import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
import polars as pl
import structlog
from pydantic import BaseModel, ConfigDict, Field

from src.eval.metrics import KL_EPSILON, improvement
from src.utils.serialization import write_json

logger = structlog.get_logger(__name__)

METRICS = ("kl", "mse", "utility_loss", "oracle_utility_loss")
DIRECTION_METRICS = ("kl", "mse", "utility_loss")
DWPI = "dwpi"
BASELINES = ("pm", "mwal")
METRICS_COLUMNS = ["environment", "regime", "method", "demo_index", "metric", "value"]
TIMING_COLUMNS = ["environment", "regime", "method", "demo_index", "seconds"]


class QueryRecord(BaseModel):
    """One method applied to one test demonstration"""

    model_config = ConfigDict(frozen=True)

    environment: str
    regime: str
    method: str
    demo_index: int
    true_weights: tuple[float, ...]
    inferred: Optional[tuple[float, ...]] = None
    metrics: dict[str, float] = Field(default_factory=dict)
    seconds: Optional[float] = None
    timed: bool = True
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class MethodSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    environment: str
    regime: str
    method: str
    means: dict[str, float]
    median_seconds: Optional[float] = None
    p90_seconds: Optional[float] = None
    queries: int
    failures: int


def _mean(values: list[float]) -> float:
    return math.fsum(sorted(values)) / len(values) if values else float("nan")


def summarise(records: list[QueryRecord]) -> list[MethodSummary]:
    """Aggregate records per (environment, regime, method); independent of record order"""
    groups: dict[tuple[str, str, str], list[QueryRecord]] = {}
    for r in records:
        groups.setdefault((r.environment, r.regime, r.method), []).append(r)

    summaries = []
    for (env, regime, method), rows in sorted(groups.items()):
        ok = [r for r in rows if not r.failed]
        means = {name: _mean([r.metrics[name] for r in ok if name in r.metrics]) for name in METRICS}
        times = sorted(r.seconds for r in ok if r.timed and r.seconds is not None)
        summaries.append(
            MethodSummary(
                environment=env,
                regime=regime,
                method=method,
                means={k: v for k, v in means.items() if not math.isnan(v)},
                median_seconds=float(np.median(times)) if times else None,
                p90_seconds=float(np.percentile(times, 90)) if times else None,
                queries=len(rows),
                failures=len(rows) - len(ok),
            )
        )
    return summaries


class EvalReport(BaseModel):
    """Benchmark outcome for one or more environments and demo regimes"""

    model_config = ConfigDict(frozen=True)

    records: tuple[QueryRecord, ...] = ()
    environments: dict[str, dict[str, Any]] = Field(
        default_factory=dict, description="Per environment: spec hash, lattice, training costs"
    )
    seeds: dict[str, int] = Field(default_factory=dict)
    config_hash: Optional[str] = None
    kl_epsilon: float = KL_EPSILON

    @property
    def summaries(self) -> list[MethodSummary]:
        return summarise(list(self.records))

    @property
    def failed_queries(self) -> int:
        return sum(1 for r in self.records if r.failed)

    def summary_for(self, environment: str, regime: str, method: str) -> Optional[MethodSummary]:
        for s in self.summaries:
            if (s.environment, s.regime, s.method) == (environment, regime, method):
                return s
        return None

    def regimes(self) -> list[tuple[str, str]]:
        return sorted({(r.environment, r.regime) for r in self.records})

    def merge(self, other: "EvalReport") -> "EvalReport":
        """Union of two reports; seeds and environment descriptors are combined"""
        if self.config_hash and other.config_hash and self.config_hash != other.config_hash:
            logger.warning("Merging reports from different configs", left=self.config_hash, right=other.config_hash)
        return EvalReport(
            records=self.records + other.records,
            environments={**self.environments, **other.environments},
            seeds={**self.seeds, **other.seeds},
            config_hash=self.config_hash or other.config_hash,
            kl_epsilon=self.kl_epsilon,
        )

    def improvements(self) -> list[dict[str, Any]]:
        """Percentage improvement of DWPI over each baseline, per metric and regime"""
        rows = []
        for env, regime in self.regimes():
            ours = self.summary_for(env, regime, DWPI)
            if ours is None:
                continue
            for base in BASELINES:
                theirs = self.summary_for(env, regime, base)
                if theirs is None:
                    continue
                for metric in DIRECTION_METRICS:
                    if metric in ours.means and metric in theirs.means:
                        rows.append(
                            {
                                "environment": env,
                                "regime": regime,
                                "baseline": base,
                                "metric": metric,
                                "improvement_pct": improvement(ours.means[metric], theirs.means[metric]),
                            }
                        )
                if ours.median_seconds and theirs.median_seconds:
                    rows.append(
                        {
                            "environment": env,
                            "regime": regime,
                            "baseline": base,
                            "metric": "median_seconds",
                            "improvement_pct": improvement(ours.median_seconds, theirs.median_seconds),
                            "speedup": theirs.median_seconds / ours.median_seconds,
                        }
                    )
        return rows

    def to_dict(self) -> dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "seeds": self.seeds,
            "kl_epsilon": self.kl_epsilon,
            "environments": self.environments,
            "failed_queries": self.failed_queries,
            "summaries": [s.model_dump(mode="json") for s in self.summaries],
            "improvements": self.improvements(),
            "failures": [
                {"environment": r.environment, "regime": r.regime, "method": r.method,
                 "demo_index": r.demo_index, "error": r.error}
                for r in self.records
                if r.failed
            ],
        }


def check_direction(report: EvalReport, min_speedup: float = 100.0, tol: float = 1e-12) -> list[str]:
    """
    Violations of the expected ordering: DWPI no worse than each baseline on
    every accuracy metric, and at least ``min_speedup`` times faster per query
    """
    violations = []
    for env, regime in report.regimes():
        ours = report.summary_for(env, regime, DWPI)
        if ours is None:
            violations.append(f"{env}/{regime}: no DWPI results")
            continue
        for base in BASELINES:
            theirs = report.summary_for(env, regime, base)
            if theirs is None or theirs.queries == theirs.failures:
                violations.append(f"{env}/{regime}: no successful {base} queries")
                continue
            for metric in DIRECTION_METRICS:
                a, b = ours.means.get(metric), theirs.means.get(metric)
                if a is not None and b is not None and a > b + tol:
                    violations.append(f"{env}/{regime}: DWPI {metric} {a:.6g} > {base} {b:.6g}")
            if ours.median_seconds is not None and theirs.median_seconds is not None:
                if ours.median_seconds * min_speedup > theirs.median_seconds:
                    violations.append(
                        f"{env}/{regime}: DWPI median {ours.median_seconds:.3g}s is not "
                        f"{min_speedup:g}x faster than {base} median {theirs.median_seconds:.3g}s"
                    )
    return violations


def metrics_frame(report: EvalReport) -> pl.DataFrame:
    rows = [
        (r.environment, r.regime, r.method, r.demo_index, name, float(r.metrics[name]))
        for r in report.records
        if not r.failed
        for name in METRICS
        if name in r.metrics
    ]
    frame = pl.DataFrame(rows, schema=METRICS_COLUMNS, orient="row")
    return frame.sort(["environment", "regime", "method", "demo_index", "metric"])


def timing_frame(report: EvalReport) -> pl.DataFrame:
    rows = [
        (r.environment, r.regime, r.method, r.demo_index, float(r.seconds))
        for r in report.records
        if not r.failed and r.timed and r.seconds is not None
    ]
    frame = pl.DataFrame(rows, schema=TIMING_COLUMNS, orient="row")
    return frame.sort(["environment", "regime", "method", "demo_index"])


def write_report(report: EvalReport, out_dir: Path) -> dict[str, Path]:
    """Write report.json, metrics.csv and timing.csv into ``out_dir``"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out_dir / "report.json",
        "metrics": out_dir / "metrics.csv",
        "timing": out_dir / "timing.csv",
    }
    write_json(paths["report"], report.to_dict())
    metrics_frame(report).write_csv(paths["metrics"])
    timing_frame(report).write_csv(paths["timing"])
    logger.info("Report written", out_dir=str(out_dir), queries=len(report.records))
    return paths
