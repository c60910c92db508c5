"""
Fitting and querying the preference regressor
"""

import math
import time
from typing import Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import DivergenceError, EmptySplitError
from src.core.preferences import PreferenceVector, ReturnSummary
from src.core.seeding import as_generator
from src.demos.dataset import DemoSet
from src.inference.mlp import (
    FitConfig,
    MlpModel,
    backward_arrays,
    forward,
    loss_arrays,
    parameters_finite,
)

logger = structlog.get_logger(__name__)


class FitResult(BaseModel):
    """Best-validation model and the per-epoch loss curves"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: MlpModel
    train_loss: tuple[float, ...] = ()
    validation_loss: tuple[float, ...] = ()
    best_validation_loss: tuple[float, ...] = Field(default=(), description="Best-so-far curve")
    best_epoch: int = 0
    epochs_run: int = 0
    stopped_early: bool = False
    seconds: float = 0.0

    def history(self) -> dict[str, list[float]]:
        return {
            "train_loss": list(self.train_loss),
            "validation_loss": list(self.validation_loss),
            "best_validation_loss": list(self.best_validation_loss),
        }


class InferenceResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    raw: PreferenceVector
    snapped: PreferenceVector
    lattice_index: int
    distance: float


def fit(model: MlpModel, ds: DemoSet, cfg: FitConfig) -> FitResult:
    """
    Mini-batch SGD with per-epoch shuffling and early stopping

    The initial model counts as epoch 0 of the best-validation search, so the
    returned snapshot is never worse on validation than the starting point.

    Raises:
        EmptySplitError: no train or no validation demonstrations
        DivergenceError: a non-finite loss, naming the epoch
    """
    x_train, y_train = ds.features_matrix("train"), ds.targets_matrix("train")
    x_val, y_val = ds.features_matrix("validation"), ds.targets_matrix("validation")
    if x_train.shape[0] == 0:
        raise EmptySplitError("train")
    if x_val.shape[0] == 0:
        raise EmptySplitError("validation")

    started = time.perf_counter()
    if cfg.max_epochs == 0:
        return FitResult(model=model, seconds=time.perf_counter() - started)

    rng = as_generator(cfg.seed)
    log = logger.bind(train=int(x_train.shape[0]), validation=int(x_val.shape[0]), loss=cfg.loss_kind)
    log.info("Fitting preference model", max_epochs=cfg.max_epochs, batch_size=cfg.batch_size)

    best_model = model
    best_val = loss_arrays(model, x_val, y_val, cfg.loss_kind)
    best_epoch = 0
    train_curve: list[float] = []
    val_curve: list[float] = []
    best_curve: list[float] = []
    stale = 0
    stopped_early = False
    current = model
    n = x_train.shape[0]

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        weights = list(current.weights)
        biases = list(current.biases)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                grads = backward_arrays(current, x_train[idx], y_train[idx], cfg.loss_kind)
                weights = [w - cfg.learning_rate * g for w, g in zip(weights, grads.weights)]
                biases = [b - cfg.learning_rate * g for b, g in zip(biases, grads.biases)]
                if not parameters_finite(weights, biases):
                    raise DivergenceError(epoch, float("nan"))
                current = current.with_parameters(weights, biases)

            train_loss = loss_arrays(current, x_train, y_train, cfg.loss_kind)
            val_loss = loss_arrays(current, x_val, y_val, cfg.loss_kind)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise DivergenceError(epoch, train_loss if not math.isfinite(train_loss) else val_loss)

        train_curve.append(train_loss)
        val_curve.append(val_loss)
        if val_loss < best_val:
            best_val, best_model, best_epoch, stale = val_loss, current, epoch, 0
        else:
            stale += 1
        best_curve.append(best_val)

        if epoch % 25 == 0:
            log.debug("Epoch finished", epoch=epoch, train_loss=train_loss, validation_loss=val_loss)
        if stale >= cfg.patience:
            stopped_early = True
            break

    seconds = time.perf_counter() - started
    log.info(
        "Preference model fitted",
        epochs=len(val_curve),
        best_epoch=best_epoch,
        best_validation_loss=best_val,
        stopped_early=stopped_early,
    )
    return FitResult(
        model=best_model,
        train_loss=tuple(train_curve),
        validation_loss=tuple(val_curve),
        best_validation_loss=tuple(best_curve),
        best_epoch=best_epoch,
        epochs_run=len(val_curve),
        stopped_early=stopped_early,
        seconds=seconds,
    )


def infer(model: MlpModel, f: ReturnSummary | Sequence[float]) -> InferenceResult:
    """Predicted preference and its nearest lattice point"""
    raw = forward(model, f)
    idx, point, dist = model.space.snap(raw)
    return InferenceResult(raw=raw, snapped=point, lattice_index=idx, distance=dist)
