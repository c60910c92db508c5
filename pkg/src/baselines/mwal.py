"""
Multiplicative-weights apprenticeship learning (MWAL)

Objective weights are updated multiplicatively by beta**G, where G(i) in [0, 1]
measures how far the learner's return on objective i exceeds the
demonstration's. Gaps are scaled by the objective's return bounds and then by
the largest scaled gap, so the objective the learner overshoots most always
gets G = 1. Objectives the learner overshoots lose weight.

The step log(1/beta) grows while the gap keeps its direction and shrinks when
it reverses, so the weights walk into the demonstration's decision region and
settle there. The loop stops once the learner matches the demonstration.
"""

import time

import numpy as np
import structlog

from src.baselines.common import (
    BaselineConfig,
    BaselineResult,
    Bounds,
    IterationRecord,
    check_within,
    feature_expectation,
    resolve_bounds,
)
from src.core.errors import DimensionMismatchError
from src.core.preferences import PreferenceVector, ReturnSummary
from src.envs.layout import EnvSpec

logger = structlog.get_logger(__name__)

# Lowest log-weight kept relative to the largest one
LOG_WEIGHT_FLOOR = -30.0


def mwal_gain(mu: np.ndarray, mu_e: np.ndarray, bounds: Bounds) -> np.ndarray:
    """G(i) = (s(i) + 1) / 2, s = range-scaled (mu - mu_E) over its largest magnitude"""
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    gap = (np.asarray(mu, dtype=np.float64) - mu_e) / (hi - lo)
    scale = np.abs(gap).max()
    if scale == 0.0:
        return np.full(gap.shape, 0.5)
    return np.clip((gap / scale + 1.0) / 2.0, 0.0, 1.0)


def mwal_update(weights: np.ndarray, gain: np.ndarray, beta: float) -> np.ndarray:
    """W(i) <- W(i) * beta**G(i), rescaled to sum to 1 and kept strictly positive"""
    logw = np.log(np.asarray(weights, dtype=np.float64)) + np.asarray(gain) * np.log(beta)
    logw = np.maximum(logw - logw.max(), LOG_WEIGHT_FLOOR)
    updated = np.exp(logw)
    return updated / updated.sum()


def _estimate(history: list[IterationRecord], estimate: str) -> PreferenceVector:
    if estimate == "final":
        return PreferenceVector.normalised(history[-1].candidate)
    # Mean over the iterates whose best response is the one the loop settled on
    settled = np.array(history[-1].feature_expectation)
    support = [h.candidate for h in history if np.allclose(h.feature_expectation, settled)]
    return PreferenceVector.normalised(np.mean(support, axis=0))


def mwal_infer(spec: EnvSpec, demo: ReturnSummary, cfg: BaselineConfig) -> BaselineResult:
    """
    Infer a preference with MWAL

    ``final`` returns the last evaluated weight. ``mean`` averages the
    evaluated weights that share the final weight's learner return; decision
    regions are convex, so the mean keeps that return.

    Raises:
        ReturnBoundsError: the demonstration lies outside the return bounds
    """
    started = time.perf_counter()
    m = spec.m
    mu_e = demo.as_array()
    if mu_e.shape != (m,):
        raise DimensionMismatchError(m, int(mu_e.size), "demonstration")
    bounds = resolve_bounds(spec, cfg)
    check_within(bounds, mu_e)
    step = float(-np.log(cfg.beta(m)))

    weights = np.ones(m) / m
    previous: np.ndarray | None = None
    history: list[IterationRecord] = []
    converged = False
    for t in range(1, cfg.iterations + 1):
        w = PreferenceVector.normalised(weights)
        mu = feature_expectation(spec, w, cfg, stream=("mwal", t)).as_array()
        gain = mwal_gain(mu, mu_e, bounds)
        direction = gain - 0.5
        if previous is not None:
            agreement = float(direction @ previous)
            if agreement > 0.0:
                step *= cfg.mwal_step_growth
            elif agreement < 0.0:
                step *= cfg.mwal_step_decay
        history.append(
            IterationRecord(
                iteration=t,
                raw=tuple(weights.tolist()),
                candidate=w.weights,
                feature_expectation=tuple(mu.tolist()),
                gain=tuple(gain.tolist()),
                step=step,
            )
        )
        if np.allclose(mu, mu_e, rtol=0.0, atol=cfg.mwal_tol):
            converged = True
            break
        weights = mwal_update(weights, gain, float(np.exp(-step)))
        previous = direction

    inferred = _estimate(history, cfg.mwal_estimate)
    logger.debug(
        "MWAL finished", iterations=len(history), converged=converged, estimate=cfg.mwal_estimate
    )
    return BaselineResult(
        method="mwal",
        inferred=inferred,
        iterations_used=len(history),
        converged=converged,
        wall_clock=time.perf_counter() - started,
        history=tuple(history),
    )
