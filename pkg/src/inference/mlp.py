"""
Feed-forward preference regressor

Normalised return summary -> rectifier layers -> softmax onto the simplex.
Parameters are plain numpy arrays; gradients are computed by reverse
accumulation through the softmax and the loss jointly.
"""

import math
from typing import Literal, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.errors import DimensionMismatchError, NonFiniteInputError
from src.core.preferences import PreferenceSpace, PreferenceVector, ReturnSummary
from src.core.seeding import Seed, as_generator
from src.demos.dataset import Demonstration, FeatureStats

LossKind = Literal["squared", "l2"]
L2_NORM_FLOOR = 1e-12


def _frozen(arrays: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    frozen = []
    for a in arrays:
        arr = np.array(a, dtype=np.float64, copy=True)
        arr.setflags(write=False)
        frozen.append(arr)
    return tuple(frozen)


class FitConfig(BaseModel):
    """Mini-batch SGD settings"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=1e-2, gt=0.0)
    max_epochs: int = Field(default=500, ge=0)
    patience: int = Field(default=50, ge=1, description="Epochs without validation improvement before stopping")
    loss_kind: LossKind = "squared"
    hidden: tuple[int, ...] = Field(default=(64, 64))
    seed: int = 0

    @field_validator("hidden")
    @classmethod
    def check_hidden(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(h < 1 for h in v):
            raise ValueError("hidden layer sizes must be positive")
        return v


class Gradients(NamedTuple):
    """Loss gradients, one entry per layer, shaped like the parameters"""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def norm(self) -> float:
        return math.sqrt(sum(float(np.sum(g * g)) for g in (*self.weights, *self.biases)))


class MlpModel(BaseModel):
    """Immutable regressor parameters plus the input normaliser and target lattice"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    stats: FeatureStats
    space: PreferenceSpace
    spec_hash: str = ""

    @field_validator("weights", "biases", mode="before")
    @classmethod
    def freeze_arrays(cls, v: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
        return _frozen(v)

    @model_validator(mode="after")
    def check_layers(self) -> "MlpModel":
        if len(self.sizes) < 2 or self.sizes[0] != self.sizes[-1]:
            raise ValueError("layer sizes must start and end at the objective count")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"layer {i} parameters do not match sizes {self.sizes}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} parameters must be finite")
        if len(self.stats.mean) != self.m or self.space.m != self.m:
            raise ValueError("normaliser and lattice must match the objective count")
        return self

    @property
    def m(self) -> int:
        return self.sizes[0]

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def with_parameters(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]) -> "MlpModel":
        return self.model_copy(update={"weights": _frozen(weights), "biases": _frozen(biases)})


def init_model(
    m: int,
    hidden: Sequence[int],
    stats: FeatureStats,
    space: PreferenceSpace,
    seed: Seed = 0,
    zero: bool = False,
    spec_hash: str = "",
) -> MlpModel:
    """
    Fresh model with He-normal weights and zero biases

    ``zero=True`` gives all-zero parameters, whose output is uniform for any input.
    """
    rng = as_generator(seed)
    sizes = (m, *hidden, m)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if zero:
            weights.append(np.zeros((fan_in, fan_out)))
        else:
            weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        sizes=sizes, weights=weights, biases=biases, stats=stats, space=space, spec_hash=spec_hash
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _activations(model: MlpModel, x: np.ndarray) -> list[np.ndarray]:
    """Inputs of every layer followed by the softmax output"""
    h = model.stats.normalise(x)
    acts = [h]
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = softmax(z) if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def _check_features(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.m:
        raise DimensionMismatchError(model.m, int(x.shape[1]), "feature")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError(x.reshape(-1).tolist())
    return x


def predict(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Batch forward pass: (B, m) features -> (B, m) simplex rows"""
    return _activations(model, _check_features(model, features))[-1]


def forward(model: MlpModel, f: ReturnSummary | Sequence[float]) -> PreferenceVector:
    """
    Predicted preference for one return summary

    Raises:
        NonFiniteInputError: NaN or infinite feature
        DimensionMismatchError: feature length differs from m
    """
    values = f.returns if isinstance(f, ReturnSummary) else f
    p = predict(model, np.asarray(values, dtype=np.float64))[0]
    return PreferenceVector(weights=tuple(p.tolist()))


def batch_arrays(batch: Sequence[Demonstration]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([d.features.returns for d in batch], dtype=np.float64)
    y = np.array([d.target.weights for d in batch], dtype=np.float64)
    return x, y


def prediction_loss(p: np.ndarray, y: np.ndarray, loss_kind: LossKind) -> float:
    sq = np.sum((p - y) ** 2, axis=1)
    if loss_kind == "squared":
        return float(np.mean(sq))
    return float(np.mean(np.sqrt(sq)))


def loss_arrays(model: MlpModel, x: np.ndarray, y: np.ndarray, loss_kind: LossKind = "squared") -> float:
    return prediction_loss(predict(model, x), y, loss_kind)


def loss(model: MlpModel, batch: Sequence[Demonstration], loss_kind: LossKind = "squared") -> float:
    """Mean over the batch of the squared (default) or plain Euclidean prediction error"""
    if not batch:
        raise ValueError("loss of an empty batch")
    x, y = batch_arrays(batch)
    return loss_arrays(model, x, y, loss_kind)


def backward_arrays(model: MlpModel, x: np.ndarray, y: np.ndarray, loss_kind: LossKind = "squared") -> Gradients:
    x = _check_features(model, x)
    acts = _activations(model, x)
    p = acts[-1]
    n = x.shape[0]
    diff = p - y
    if loss_kind == "squared":
        g = 2.0 * diff / n
    else:
        norms = np.maximum(np.sqrt(np.sum(diff * diff, axis=1, keepdims=True)), L2_NORM_FLOOR)
        g = diff / norms / n
    # softmax Jacobian-vector product
    delta = p * (g - np.sum(g * p, axis=1, keepdims=True))

    grad_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0.0)
    return Gradients(weights=tuple(grad_w), biases=tuple(grad_b))


def backward(model: MlpModel, batch: Sequence[Demonstration], loss_kind: LossKind = "squared") -> Gradients:
    """Exact gradient of ``loss`` with respect to every weight and bias"""
    if not batch:
        raise ValueError("gradient of an empty batch")
    x, y = batch_arrays(batch)
    return backward_arrays(model, x, y, loss_kind)


class GradientCheck(NamedTuple):
    coordinates: tuple[tuple[str, int, int], ...]  # (kind, layer, flat index)
    analytic: np.ndarray
    numeric: np.ndarray
    relative_errors: np.ndarray

    @property
    def max_relative_error(self) -> float:
        return float(self.relative_errors.max()) if self.relative_errors.size else 0.0


def gradient_check(
    model: MlpModel,
    x: np.ndarray,
    y: np.ndarray,
    loss_kind: LossKind = "squared",
    n_coords: int = 100,
    step: float = 1e-5,
    seed: Seed = 0,
    floor: float = 1e-6,
) -> GradientCheck:
    """
    Compare analytic gradients with central finite differences

    Relative error per coordinate is |a - n| / max(|a|, |n|, floor).
    """
    rng = as_generator(seed)
    grads = backward_arrays(model, x, y, loss_kind)
    params = [("w", i) for i in range(len(model.weights))] + [("b", i) for i in range(len(model.biases))]
    sizes = np.array([getattr(model, "weights" if k == "w" else "biases")[i].size for k, i in params])
    probs = sizes / sizes.sum()

    coords = []
    analytic = []
    numeric = []
    for _ in range(n_coords):
        kind, layer = params[int(rng.choice(len(params), p=probs))]
        source = model.weights if kind == "w" else model.biases
        flat = int(rng.integers(source[layer].size))
        base = source[layer]

        def shifted(delta: float) -> float:
            arr = base.copy().reshape(-1)
            arr[flat] += delta
            updated = list(source)
            updated[layer] = arr.reshape(base.shape)
            if kind == "w":
                perturbed = model.with_parameters(updated, model.biases)
            else:
                perturbed = model.with_parameters(model.weights, updated)
            return loss_arrays(perturbed, x, y, loss_kind)

        num = (shifted(step) - shifted(-step)) / (2.0 * step)
        grad_source = grads.weights if kind == "w" else grads.biases
        coords.append((kind, layer, flat))
        analytic.append(float(grad_source[layer].reshape(-1)[flat]))
        numeric.append(num)

    a = np.array(analytic)
    n = np.array(numeric)
    rel = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return GradientCheck(tuple(coords), a, n, rel)


def parameters_finite(weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]) -> bool:
    return all(np.all(np.isfinite(a)) for a in (*weights, *biases))

