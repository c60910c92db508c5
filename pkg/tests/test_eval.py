import importlib
import itertools
import math
import random

import polars as pl
import pytest

from src.baselines import BaselineConfig
from src.core.errors import ConfigurationError
from src.core.preferences import PreferenceVector
from src.demos import Demonstration, DemoSet, FeatureStats
from src.envs import oracle_best
from src.eval import (
    METRICS_COLUMNS,
    TIMING_COLUMNS,
    EvalConfig,
    EvalReport,
    QueryRecord,
    benchmark,
    check_direction,
    improvement,
    kl_metric,
    mse_metric,
    oracle_utility_metric,
    regime_name,
    summarise,
    utility_metric,
    write_report,
)
from src.inference import init_model


def pv(*weights: float) -> PreferenceVector:
    return PreferenceVector(weights=weights)


def record(method: str, k: int, kl: float, seconds: float, timed: bool = True, regime: str = "optimal") -> QueryRecord:
    return QueryRecord(
        environment="cdst",
        regime=regime,
        method=method,
        demo_index=k,
        true_weights=(0.5, 0.5),
        inferred=(0.5, 0.5),
        metrics={"kl": kl, "mse": kl / 2, "utility_loss": kl * 10, "oracle_utility_loss": 0.0},
        seconds=seconds,
        timed=timed,
    )


def healthy_report() -> EvalReport:
    records = []
    for k in range(4):
        records.append(record("dwpi", k, 0.01, 1e-5))
        records.append(record("pm", k, 0.2, 1e-2))
        records.append(record("mwal", k, 0.3, 2e-2))
    return EvalReport(records=tuple(records))


@pytest.mark.unit
class TestAccuracyMetrics:
    def test_kl_one_hot_against_uniform(self):
        assert kl_metric(pv(1.0, 0.0), pv(0.5, 0.5)) == pytest.approx(math.log(2), rel=1e-6)

    def test_kl_example(self):
        assert kl_metric(pv(0.3, 0.7), pv(0.4, 0.6)) == pytest.approx(0.02160, abs=5e-5)

    def test_kl_identical_is_zero(self):
        assert kl_metric(pv(0.2, 0.8), pv(0.2, 0.8)) == pytest.approx(0.0, abs=1e-12)

    def test_kl_asymmetric(self):
        assert kl_metric(pv(0.9, 0.1), pv(0.5, 0.5)) != pytest.approx(kl_metric(pv(0.5, 0.5), pv(0.9, 0.1)))

    def test_kl_finite_with_zero_components(self):
        assert math.isfinite(kl_metric(pv(0.0, 1.0), pv(1.0, 0.0)))

    @pytest.mark.parametrize(
        ("true", "inferred", "expected"),
        [((1.0, 0.0), (0.0, 1.0), 1.0), ((0.3, 0.7), (0.4, 0.6), 0.01), ((0.5, 0.5), (0.5, 0.5), 0.0)],
    )
    def test_mse(self, true, inferred, expected):
        assert mse_metric(pv(*true), pv(*inferred)) == pytest.approx(expected)

    def test_improvement(self):
        assert improvement(0.05, 0.2) == pytest.approx(75.0)
        assert improvement(0.0, 0.0) == 0.0
        assert improvement(0.1, 0.0) is None


@pytest.mark.unit
class TestUtilityMetrics:
    def test_oracle_example(self, cdst_spec):
        assert oracle_utility_metric(cdst_spec, pv(0.0, 1.0), pv(1.0, 0.0)) == pytest.approx(18.0)

    def test_oracle_same_region_is_free(self, cdst_spec):
        assert oracle_utility_metric(cdst_spec, pv(0.9, 0.1), pv(1.0, 0.0)) == 0.0

    def test_agent_example(self, tiny_cdst_spec, tiny_agent):
        assert utility_metric(tiny_cdst_spec, tiny_agent, pv(0.0, 1.0), pv(0.9, 0.1)) == pytest.approx(3.0)

    def test_agent_identical_is_zero(self, tiny_cdst_spec, tiny_agent):
        assert utility_metric(tiny_cdst_spec, tiny_agent, pv(0.3, 0.7), pv(0.3, 0.7)) == 0.0

    def test_off_lattice_inference_snaps(self, tiny_cdst_spec, tiny_agent):
        # 0.35 lies between lattice points; the metric snaps before rolling out
        assert utility_metric(tiny_cdst_spec, tiny_agent, pv(0.4, 0.6), pv(0.35, 0.65)) == 0.0

    def test_cache_is_filled(self, tiny_cdst_spec, tiny_agent):
        cache: dict = {}
        utility_metric(tiny_cdst_spec, tiny_agent, pv(0.0, 1.0), pv(0.9, 0.1), cache)
        assert set(cache) == {0, 9}

    def test_foreign_layout(self, cdst_spec, tiny_agent):
        with pytest.raises(ConfigurationError):
            utility_metric(cdst_spec, tiny_agent, pv(0.0, 1.0), pv(0.0, 1.0))


@pytest.mark.unit
class TestReport:
    def test_regime_names(self):
        assert regime_name(0.0) == "optimal"
        assert regime_name(0.05) == "suboptimal_eta0.05"

    def test_summaries_are_order_invariant(self):
        report = healthy_report()
        shuffled = list(report.records)
        random.Random(3).shuffle(shuffled)
        assert summarise(shuffled) == report.summaries

    def test_failures_excluded_from_means(self):
        failed = QueryRecord(
            environment="cdst", regime="optimal", method="pm", demo_index=9, true_weights=(0.5, 0.5), error="BASELINE_FAILED: x"
        )
        report = EvalReport(records=healthy_report().records + (failed,))
        pm = report.summary_for("cdst", "optimal", "pm")
        assert pm.failures == 1
        assert pm.queries == 5
        assert pm.means["kl"] == pytest.approx(0.2)
        assert report.failed_queries == 1

    def test_warmup_excluded_from_timing(self):
        records = (record("dwpi", 0, 0.0, 5.0, timed=False), record("dwpi", 1, 0.0, 1.0), record("dwpi", 2, 0.0, 3.0))
        summary = EvalReport(records=records).summary_for("cdst", "optimal", "dwpi")
        assert summary.median_seconds == pytest.approx(2.0)

    def test_improvements(self):
        rows = healthy_report().improvements()
        kl_pm = next(r for r in rows if r["baseline"] == "pm" and r["metric"] == "kl")
        assert kl_pm["improvement_pct"] == pytest.approx(95.0)
        speed = next(r for r in rows if r["baseline"] == "mwal" and r["metric"] == "median_seconds")
        assert speed["speedup"] == pytest.approx(2000.0)

    def test_merge_keeps_all_records(self):
        a = EvalReport(records=(record("dwpi", 0, 0.0, 1.0),), seeds={"master": 1})
        b = EvalReport(records=(record("dwpi", 0, 0.0, 1.0, regime="suboptimal_eta0.05"),), seeds={"demos": 2})
        merged = a.merge(b)
        assert len(merged.records) == 2
        assert merged.seeds == {"master": 1, "demos": 2}
        assert merged.regimes() == [("cdst", "optimal"), ("cdst", "suboptimal_eta0.05")]


@pytest.mark.unit
class TestCheckDirection:
    def test_healthy_report_passes(self):
        assert check_direction(healthy_report()) == []

    def test_accuracy_violation(self):
        records = [r if r.method != "dwpi" else r.model_copy(update={"metrics": {**r.metrics, "kl": 0.5}}) for r in healthy_report().records]
        violations = check_direction(EvalReport(records=tuple(records)))
        assert any("kl" in v and "pm" in v for v in violations)
        assert any("kl" in v and "mwal" in v for v in violations)

    def test_speed_violation(self):
        records = [r if r.method != "dwpi" else r.model_copy(update={"seconds": 1e-3}) for r in healthy_report().records]
        violations = check_direction(EvalReport(records=tuple(records)), min_speedup=100.0)
        assert any("faster than pm" in v for v in violations)

    def test_missing_baseline(self):
        records = tuple(r for r in healthy_report().records if r.method != "mwal")
        assert any("mwal" in v for v in check_direction(EvalReport(records=records)))


@pytest.mark.unit
class TestWriteReport:
    def test_files_and_columns(self, tmp_path):
        paths = write_report(healthy_report(), tmp_path)
        assert set(paths) == {"report", "metrics", "timing"}
        metrics = pl.read_csv(paths["metrics"])
        timing = pl.read_csv(paths["timing"])
        assert metrics.columns == METRICS_COLUMNS
        assert timing.columns == TIMING_COLUMNS
        assert metrics.height == 12 * 4
        assert timing.height == 12

    def test_failed_queries_left_out_of_csv(self, tmp_path):
        failed = QueryRecord(environment="cdst", regime="optimal", method="pm", demo_index=9, true_weights=(0.5, 0.5), error="x")
        paths = write_report(EvalReport(records=(failed,)), tmp_path)
        assert pl.read_csv(paths["metrics"]).height == 0


@pytest.mark.integration
class TestBenchmark:
    @pytest.fixture
    def test_demos(self, tiny_cdst_spec):
        demos = []
        for k, w0 in enumerate((0.0, 0.5, 0.9)):
            w = pv(w0, 1.0 - w0)
            demos.append(
                Demonstration(
                    features=oracle_best(tiny_cdst_spec, w).rewards, target=w, noise_eta=0.0, seed=k, split="test"
                )
            )
        return DemoSet(demos=tuple(demos), spec_hash=tiny_cdst_spec.spec_hash(), lattice={"m": 2, "grid_step": 0.1})

    @pytest.fixture
    def uniform_model(self, space2, tiny_cdst_spec):
        stats = FeatureStats(mean=(5.0, -2.0), std=(4.0, 1.5))
        return init_model(2, (8,), stats, space2, zero=True, spec_hash=tiny_cdst_spec.spec_hash())

    def test_records_every_method_and_query(self, tiny_cdst_spec, tiny_agent, uniform_model, test_demos):
        report = benchmark(
            tiny_cdst_spec,
            tiny_agent,
            uniform_model,
            test_demos,
            BaselineConfig(feature_source="oracle", iterations=5),
            EvalConfig(),
            clock=itertools.count().__next__,
        )
        assert len(report.records) == 9
        assert report.failed_queries == 0
        assert {r.regime for r in report.records} == {"optimal"}
        assert [r.timed for r in report.records if r.method == "dwpi"] == [False, True, True]
        assert all(r.seconds == 1 for r in report.records)
        dwpi = report.summary_for("cdst", "optimal", "dwpi")
        assert dwpi.means["kl"] >= 0.0
        mid = next(r for r in report.records if r.method == "dwpi" and r.demo_index == 1)
        assert mid.metrics["kl"] == pytest.approx(0.0, abs=1e-12)

    def test_max_queries(self, tiny_cdst_spec, tiny_agent, uniform_model, test_demos):
        report = benchmark(
            tiny_cdst_spec,
            tiny_agent,
            uniform_model,
            test_demos,
            BaselineConfig(feature_source="oracle", iterations=3),
            EvalConfig(methods=("dwpi",), max_queries=1),
        )
        assert len(report.records) == 1
        assert report.records[0].timed

    def test_deterministic_accuracy(self, tiny_cdst_spec, tiny_agent, uniform_model, test_demos):
        cfg = BaselineConfig(feature_source="oracle", iterations=5)
        a = benchmark(tiny_cdst_spec, tiny_agent, uniform_model, test_demos, cfg, clock=itertools.count().__next__)
        b = benchmark(tiny_cdst_spec, tiny_agent, uniform_model, test_demos, cfg, clock=itertools.count().__next__)
        assert a.records == b.records

    def test_baseline_failure_is_recorded(self, tiny_cdst_spec, tiny_agent, uniform_model, test_demos):
        far = Demonstration(features=[100.0, -1.0], target=[0.5, 0.5], noise_eta=0.0, seed=9, split="test")
        demos = test_demos.model_copy(update={"demos": (far,)})
        report = benchmark(
            tiny_cdst_spec,
            tiny_agent,
            uniform_model,
            demos,
            BaselineConfig(feature_source="oracle", iterations=3),
            EvalConfig(methods=("dwpi", "mwal")),
        )
        failed = [r for r in report.records if r.failed]
        assert [r.method for r in failed] == ["mwal"]
        assert failed[0].error.startswith("RETURN_BOUNDS_VIOLATED")

    def test_arithmetic_failure_is_recorded(self, mocker, tiny_cdst_spec, tiny_agent, uniform_model, test_demos):
        mocker.patch.dict(
            importlib.import_module("src.eval.benchmark").METHODS, {"pm": mocker.Mock(side_effect=FloatingPointError("overflow"))}
        )
        report = benchmark(
            tiny_cdst_spec,
            tiny_agent,
            uniform_model,
            test_demos,
            BaselineConfig(feature_source="oracle", iterations=3),
            EvalConfig(methods=("dwpi", "pm", "mwal")),
        )
        failed = [r for r in report.records if r.failed]
        assert len(failed) == 3
        assert {r.method for r in failed} == {"pm"}
        assert failed[0].error == "FloatingPointError: overflow"
        assert len([r for r in report.records if r.method == "mwal" and not r.failed]) == 3

    def test_needs_test_split(self, tiny_cdst_spec, tiny_agent, uniform_model, test_demos):
        demos = test_demos.model_copy(
            update={"demos": tuple(d.model_copy(update={"split": "train"}) for d in test_demos.demos)}
        )
        with pytest.raises(ConfigurationError):
            benchmark(tiny_cdst_spec, tiny_agent, uniform_model, demos, BaselineConfig(feature_source="oracle"))

    def test_foreign_layout(self, cdst_spec, tiny_agent, uniform_model, test_demos):
        with pytest.raises(ConfigurationError):
            benchmark(cdst_spec, tiny_agent, uniform_model, test_demos, BaselineConfig(feature_source="oracle"))
