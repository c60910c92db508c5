"""
Pipeline service: one method per stage, artifacts on disk under ``out_dir``

Stages: train agent -> generate demonstrations -> fit the preference model ->
infer / run baselines -> benchmark. Every stage loads its inputs, checks the
stage hashes they embed, derives its stream seeds from the master seed and
writes its outputs.
"""

from pathlib import Path
from typing import Any, Optional, Sequence

import polars as pl
import structlog

from src.agents import QTable, load_qtable, oracle_match, read_sidecar, save_qtable, train_agent
from src.baselines import METHODS, BaselineResult
from src.core.errors import AcceptanceError, ArtifactError, ConfigurationError
from src.core.preferences import ReturnSummary
from src.demos import DemoSet, feature_stats, generate_demos, load_demos, noise_spec_for, save_demos, split
from src.eval import EvalReport, benchmark, check_direction, regime_name, write_report
from src.inference import FitResult, InferenceResult, MlpModel, fit, infer, init_model, load_model, save_model
from src.inference.storage import read_sidecar as read_model_sidecar
from src.schemas.run_config import RunConfig
from src.utils.monitoring import Stopwatch
from src.utils.serialization import read_json, write_json

logger = structlog.get_logger(__name__)

AGENT_FILE = "agent.qt"
TIMINGS_FILE = "timings.json"


def demos_file(eta: float) -> str:
    return f"demos_eta{eta:g}.jsonl"


def model_file(eta: float) -> str:
    return f"model_eta{eta:g}.dwpi"


class PipelineService:
    """
    Runs the DWPI pipeline stages for one RunConfig

    Handles:
    - Agent training and oracle comparison
    - Demonstration generation and splitting
    - Preference model fitting and single queries
    - Baseline queries and the full benchmark
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.logger = logger.bind(service="pipeline", env=config.environment, seed=config.seed)

    # artifacts

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_effective_config(self) -> Path:
        target = self.path("effective_config.json")
        write_json(target, {"config": self.config.model_dump(mode="json"), "config_hash": self.config.config_hash()})
        return target

    def record_timing(self, stage: str, seconds: float) -> None:
        """Wall-clock costs live apart from the artifacts so those stay byte-stable"""
        target = self.path(TIMINGS_FILE)
        timings = read_json(target) if target.exists() else {}
        timings[stage] = seconds
        write_json(target, timings)

    def read_timings(self) -> dict[str, float]:
        target = self.path(TIMINGS_FILE)
        return read_json(target) if target.exists() else {}

    def _check_hash(self, what: str, found: Optional[str], expected: str) -> None:
        if found != expected:
            raise ArtifactError(
                f"{what} was produced by a different configuration",
                details={"found": found, "expected": expected},
            )

    # stages

    def train_agent(self) -> tuple[QTable, Path, float]:
        """
        Train the dynamic-weight agent and save it

        Returns:
            (table, artifact path, fraction of lattice points matching the oracle)
        """
        cfg = self.config
        self.write_effective_config()
        train_cfg = cfg.train.model_copy(update={"seed": cfg.stream_seed("train_agent")})
        with Stopwatch("train_agent") as sw:
            q = train_agent(cfg.spec, cfg.space, train_cfg)
        match = oracle_match(q)
        target = save_qtable(
            q,
            self.path(AGENT_FILE),
            config_hash=cfg.agent_hash(),
            extra={"oracle_match": match},
        )
        self.record_timing("train_agent", sw.seconds)
        self.logger.info("Agent trained", oracle_match=round(match, 4), path=str(target))
        return q, target, match

    def load_agent(self, path: Optional[Path] = None) -> QTable:
        path = Path(path) if path else self.path(AGENT_FILE)
        q = load_qtable(path, expected_spec=self.config.spec)
        self._check_hash("Agent", read_sidecar(path).get("config_hash"), self.config.agent_hash())
        return q

    def gen_demos(self, agent_path: Optional[Path] = None, eta: Optional[float] = None) -> tuple[DemoSet, Path]:
        cfg = self.config
        eta = cfg.noise_eta if eta is None else eta
        self.write_effective_config()
        q = self.load_agent(agent_path)
        with Stopwatch("gen_demos") as sw:
            ds = generate_demos(
                q,
                cfg.space,
                noise_spec_for(cfg.spec, eta),
                cfg.n_demos,
                seed=cfg.stream_seed("demos", f"{eta:g}"),
                workers=cfg.workers,
                episodes_per_demo=cfg.episodes_per_demo,
                config_hash=cfg.demos_hash(eta),
            )
            ds = split(ds, cfg.split, seed=cfg.stream_seed("split", f"{eta:g}"))
        target = save_demos(ds, self.path(demos_file(eta)))
        self.record_timing(f"gen_demos_eta{eta:g}", sw.seconds)
        self.logger.info("Demonstrations generated", eta=eta, splits=ds.split_sizes(), path=str(target))
        return ds, target

    def load_demo_set(self, path: Optional[Path] = None, eta: Optional[float] = None) -> DemoSet:
        eta = self.config.noise_eta if eta is None else eta
        path = Path(path) if path else self.path(demos_file(eta))
        ds = load_demos(path, expected_spec=self.config.spec)
        if ds.demos:
            eta = ds.demos[0].noise_eta
        self._check_hash("Demonstration set", ds.config_hash, self.config.demos_hash(eta))
        return ds

    def train_dwpi(self, demos_path: Optional[Path] = None) -> tuple[FitResult, Path]:
        cfg = self.config
        self.write_effective_config()
        ds = self.load_demo_set(demos_path)
        eta = ds.demos[0].noise_eta if ds.demos else cfg.noise_eta
        model = init_model(
            cfg.spec.m,
            cfg.fit.hidden,
            feature_stats(ds),
            cfg.space,
            seed=cfg.stream_seed("init_model", f"{eta:g}"),
            spec_hash=cfg.spec.spec_hash(),
        )
        fit_cfg = cfg.fit.model_copy(update={"seed": cfg.stream_seed("fit", f"{eta:g}")})
        with Stopwatch("train_dwpi") as sw:
            result = fit(model, ds, fit_cfg)
        target = save_model(
            result.model,
            self.path(model_file(eta)),
            extra={
                "config_hash": cfg.model_hash(eta),
                "train_eta": eta,
                "fit_config": fit_cfg.model_dump(mode="json"),
                "best_epoch": result.best_epoch,
                "epochs_run": result.epochs_run,
                "history": result.history(),
            },
        )
        curve = pl.DataFrame(
            {
                "epoch": list(range(1, result.epochs_run + 1)),
                "train_loss": list(result.train_loss),
                "validation_loss": list(result.validation_loss),
                "best_validation_loss": list(result.best_validation_loss),
            },
            schema={
                "epoch": pl.Int64,
                "train_loss": pl.Float64,
                "validation_loss": pl.Float64,
                "best_validation_loss": pl.Float64,
            },
        )
        curve.write_csv(self.path(f"loss_curve_eta{eta:g}.csv"))
        self.record_timing(f"train_dwpi_eta{eta:g}", sw.seconds)
        self.logger.info("Preference model trained", best_epoch=result.best_epoch, path=str(target))
        return result, target

    def load_dwpi(self, path: Optional[Path] = None, eta: Optional[float] = None) -> MlpModel:
        eta = self.config.noise_eta if eta is None else eta
        path = Path(path) if path else self.path(model_file(eta))
        model = load_model(path, expected_spec_hash=self.config.spec.spec_hash())
        meta = read_model_sidecar(path)
        trained_eta = float(meta.get("train_eta", eta))
        self._check_hash("Preference model", meta.get("config_hash"), self.config.model_hash(trained_eta))
        return model

    def infer(self, features: Sequence[float], model_path: Optional[Path] = None) -> InferenceResult:
        model = self.load_dwpi(model_path)
        return infer(model, ReturnSummary(returns=tuple(features)))

    def run_baseline(
        self,
        method: str,
        demos_path: Optional[Path] = None,
        features: Optional[Sequence[float]] = None,
        max_queries: Optional[int] = None,
    ) -> tuple[list[BaselineResult], Path]:
        """Run one baseline on a literal feature vector or on a demo file's test split"""
        if method not in METHODS:
            raise ConfigurationError(f"Unknown baseline '{method}'", details={"choices": sorted(METHODS)})
        cfg = self.config
        baseline_cfg = cfg.baseline.model_copy(update={"seed": cfg.stream_seed("baseline", method)})
        if features is not None:
            queries: list[tuple[Optional[tuple[float, ...]], ReturnSummary]] = [
                (None, ReturnSummary(returns=tuple(features)))
            ]
        else:
            ds = self.load_demo_set(demos_path)
            test = ds.subset("test")[:max_queries] if max_queries else ds.subset("test")
            queries = [(d.target.weights, d.features) for d in test]
        if not queries:
            raise ConfigurationError("No demonstrations to run the baseline on")

        results = []
        payload: list[dict[str, Any]] = []
        for k, (target, demo) in enumerate(queries):
            query_cfg = baseline_cfg.model_copy(update={"seed": cfg.stream_seed("baseline", method, k)})
            result = METHODS[method](cfg.spec, demo, query_cfg)
            results.append(result)
            payload.append({"demo_index": k, "target": target, "demo": list(demo.returns), **result.model_dump(mode="json")})
        target_path = self.path(f"baseline_{method}.json")
        write_json(target_path, {"method": method, "config_hash": cfg.config_hash(), "results": payload})
        self.logger.info("Baseline finished", method=method, queries=len(results), path=str(target_path))
        return results, target_path

    def evaluate(
        self,
        agent_path: Optional[Path] = None,
        model_path: Optional[Path] = None,
        demo_paths: Optional[Sequence[Path]] = None,
        assert_direction: bool = False,
    ) -> tuple[EvalReport, dict[str, Path]]:
        """
        Benchmark every regime and write report.json, metrics.csv, timing.csv

        Raises:
            AcceptanceError: ``assert_direction`` is set and DWPI does not beat
                both baselines on accuracy and per-query time
        """
        cfg = self.config
        self.write_effective_config()
        q = self.load_agent(agent_path)
        timings = self.read_timings()

        if demo_paths:
            demo_sets = [self.load_demo_set(p) for p in demo_paths]
        else:
            demo_sets = [self.load_demo_set(eta=eta) for eta in cfg.evaluation.regimes]

        report = EvalReport(config_hash=cfg.config_hash(), seeds={"master": cfg.seed})
        for ds in demo_sets:
            eta = ds.demos[0].noise_eta if ds.demos else 0.0
            model = self.load_dwpi(model_path, eta=eta)
            part = benchmark(
                cfg.spec,
                q,
                model,
                ds,
                cfg.baseline.model_copy(update={"seed": cfg.stream_seed("baseline", "benchmark")}),
                cfg.evaluation,
                regime=regime_name(eta),
                training_seconds={
                    k: v for k, v in timings.items() if k == "train_agent" or k == f"train_dwpi_eta{eta:g}"
                },
            )
            report = report.merge(part)
        report = report.model_copy(
            update={
                "seeds": {
                    "master": cfg.seed,
                    "train_agent": cfg.stream_seed("train_agent"),
                    **{f"demos_eta{ds.demos[0].noise_eta:g}": cfg.stream_seed("demos", f"{ds.demos[0].noise_eta:g}")
                       for ds in demo_sets if ds.demos},
                }
            }
        )
        paths = write_report(report, self.out_dir)

        violations = check_direction(report, cfg.evaluation.min_speedup)
        if violations:
            self.logger.warning("Expected ordering violated", count=len(violations))
        if assert_direction and violations:
            raise AcceptanceError(violations)
        return report, paths
