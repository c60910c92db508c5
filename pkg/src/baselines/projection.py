"""
Projection-method apprenticeship learning (PM)

Keeps a running point mu_bar on the convex hull of the candidates' feature
expectations, always proposing the weight that points from mu_bar to the
demonstration.
"""

import time

import numpy as np
import structlog

from src.baselines.common import BaselineConfig, BaselineResult, IterationRecord, feature_expectation
from src.core.errors import BaselineError, DimensionMismatchError
from src.core.preferences import PreferenceVector, ReturnSummary
from src.envs.layout import EnvSpec

logger = structlog.get_logger(__name__)


def _candidate(raw: np.ndarray) -> PreferenceVector | None:
    clipped = np.clip(raw, 0.0, None)
    total = clipped.sum()
    if total <= 0.0:
        return None
    return PreferenceVector.normalised(clipped / total)


def pm_infer(spec: EnvSpec, demo: ReturnSummary, cfg: BaselineConfig) -> BaselineResult:
    """
    Infer a preference with the projection method

    Each iteration proposes w proportional to mu_E - mu_bar (clipped to the
    non-negative orthant), evaluates its feature expectation mu_i and moves
    mu_bar to the projection of mu_E onto the segment [mu_bar, mu_i]. The loop
    stops when ||mu_E - mu_bar|| < pm_tol or after T candidates; the last
    evaluated candidate is returned.

    Raises:
        BaselineError: the very first proposal is the zero vector (the demo
            dominates nothing the uniform policy achieves)
    """
    started = time.perf_counter()
    m = spec.m
    mu_e = demo.as_array()
    if mu_e.shape != (m,):
        raise DimensionMismatchError(m, int(mu_e.size), "demonstration")

    uniform = PreferenceVector.uniform(m)
    mu_bar = feature_expectation(spec, uniform, cfg, stream=("pm", 0)).as_array()
    if np.allclose(mu_e, mu_bar, rtol=0.0, atol=cfg.pm_tol):
        return BaselineResult(
            method="pm",
            inferred=uniform,
            iterations_used=0,
            converged=True,
            wall_clock=time.perf_counter() - started,
        )

    history: list[IterationRecord] = []
    last: PreferenceVector | None = None
    converged = False
    for i in range(1, cfg.iterations + 1):
        raw = mu_e - mu_bar
        margin = float(np.linalg.norm(raw))
        if margin < cfg.pm_tol:
            converged = True
            break
        w = _candidate(raw)
        if w is None:
            if last is None:
                raise BaselineError(
                    "Projection produced no valid weight: the demonstration dominates nothing",
                    details={"raw": raw.tolist(), "margin": margin},
                )
            break
        mu_i = feature_expectation(spec, w, cfg, stream=("pm", i)).as_array()
        history.append(
            IterationRecord(
                iteration=i,
                raw=tuple(raw.tolist()),
                candidate=w.weights,
                feature_expectation=tuple(mu_i.tolist()),
                margin=margin,
            )
        )
        last = w

        d = mu_i - mu_bar
        denom = float(d @ d)
        if denom == 0.0:
            # the candidate adds nothing new to the hull
            break
        t = min(max(float(d @ (mu_e - mu_bar)) / denom, 0.0), 1.0)
        mu_bar = mu_bar + t * d
    else:
        converged = float(np.linalg.norm(mu_e - mu_bar)) < cfg.pm_tol

    assert last is not None
    logger.debug("Projection method finished", iterations=len(history), converged=converged)
    return BaselineResult(
        method="pm",
        inferred=last,
        iterations_used=len(history),
        converged=converged,
        wall_clock=time.perf_counter() - started,
        history=tuple(history),
    )
