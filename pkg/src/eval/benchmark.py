"""
Benchmark harness: DWPI against the apprenticeship-learning baselines on a
frozen test split
"""

import time
from typing import Callable, Optional

import structlog
from pydantic import BaseModel, ConfigDict, Field

from src.agents.dwrl import QTable
from src.baselines import METHODS, BaselineConfig
from src.core.errors import ConfigurationError, DWPIError
from src.core.preferences import PreferenceVector, ReturnSummary
from src.core.seeding import derive_seed
from src.demos.dataset import Demonstration, DemoSet
from src.envs.layout import EnvSpec
from src.eval.metrics import kl_metric, mse_metric, oracle_utility_metric, utility_metric
from src.eval.report import DWPI, EvalReport, QueryRecord
from src.inference.mlp import MlpModel
from src.inference.training import infer

logger = structlog.get_logger(__name__)


class EvalConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    regimes: tuple[float, ...] = Field(default=(0.0, 0.05), description="Noise levels to evaluate")
    methods: tuple[str, ...] = (DWPI, "pm", "mwal")
    max_queries: Optional[int] = Field(default=None, ge=1, description="Test demos per regime; None uses all")
    min_speedup: float = Field(default=100.0, gt=0.0)


def regime_name(eta: float) -> str:
    return "optimal" if eta == 0.0 else f"suboptimal_eta{eta:g}"


def _run_query(
    method: str,
    spec: EnvSpec,
    model: MlpModel,
    demo: Demonstration,
    baseline_cfg: BaselineConfig,
) -> PreferenceVector:
    if method == DWPI:
        return infer(model, demo.features).raw
    return METHODS[method](spec, demo.features, baseline_cfg).inferred


def benchmark(
    spec: EnvSpec,
    q: QTable,
    model: MlpModel,
    demos: DemoSet,
    baseline_cfg: BaselineConfig,
    eval_cfg: EvalConfig = EvalConfig(),
    regime: Optional[str] = None,
    training_seconds: Optional[dict[str, float]] = None,
    clock: Callable[[], float] = time.perf_counter,
) -> EvalReport:
    """
    Run every configured method on every test demonstration

    Queries run sequentially on one worker. The first query of each method is
    a warm-up: its accuracy counts, its time does not. A method failing on a
    demonstration is recorded and left out of the aggregates.

    Raises:
        ConfigurationError: no test demonstrations, unknown method, or a
            demo set produced on another layout
    """
    if demos.spec_hash != spec.spec_hash():
        raise ConfigurationError("Demonstrations were generated on a different layout")
    unknown = [m for m in eval_cfg.methods if m != DWPI and m not in METHODS]
    if unknown:
        raise ConfigurationError("Unknown benchmark methods", details={"methods": unknown})

    test = demos.subset("test")
    if eval_cfg.max_queries is not None:
        test = test[: eval_cfg.max_queries]
    if not test:
        raise ConfigurationError("Benchmark needs at least one test demonstration")
    if regime is None:
        regime = regime_name(test[0].noise_eta)

    log = logger.bind(env=spec.name, regime=regime, queries=len(test))
    log.info("Benchmark started", methods=list(eval_cfg.methods))

    policy_returns: dict[int, ReturnSummary] = {}
    records: list[QueryRecord] = []
    for method in eval_cfg.methods:
        for k, demo in enumerate(test):
            base = dict(
                environment=spec.name,
                regime=regime,
                method=method,
                demo_index=k,
                true_weights=demo.target.weights,
            )
            query_cfg = baseline_cfg.model_copy(update={"seed": derive_seed(baseline_cfg.seed, regime, k)})
            started = clock()
            try:
                inferred = _run_query(method, spec, model, demo, query_cfg)
            except (DWPIError, ArithmeticError) as e:
                if isinstance(e, DWPIError):
                    code, message = e.error_code, e.message
                else:
                    code, message = type(e).__name__, str(e)
                log.warning("Query failed", method=method, demo_index=k, error_code=code)
                records.append(QueryRecord(**base, error=f"{code}: {message}"))
                continue
            seconds = clock() - started
            metrics = {
                "kl": kl_metric(demo.target, inferred),
                "mse": mse_metric(demo.target, inferred),
                "utility_loss": utility_metric(spec, q, demo.target, inferred, policy_returns),
                "oracle_utility_loss": oracle_utility_metric(spec, demo.target, inferred),
            }
            records.append(
                QueryRecord(
                    **base,
                    inferred=inferred.weights,
                    metrics=metrics,
                    seconds=seconds,
                    timed=k > 0 or len(test) == 1,
                )
            )
        log.info("Method evaluated", method=method)

    environment = {
        "spec_hash": spec.spec_hash(),
        "lattice": q.space.descriptor(),
        "training_seconds": dict(training_seconds or {}),
    }
    report = EvalReport(records=tuple(records), environments={spec.name: environment})
    log.info("Benchmark finished", failed=report.failed_queries)
    return report
