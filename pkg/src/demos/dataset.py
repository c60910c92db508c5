"""
Demonstration datasets

A demonstration pairs the (possibly noisy) per-objective return of one greedy
episode with the preference the agent played it under.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.agents.dwrl import QTable, greedy_rollout
from src.core.errors import ConfigurationError, EmptySplitError, LatticeError
from src.core.preferences import (
    NoiseSpec,
    PreferenceSpace,
    PreferenceVector,
    ReturnSummary,
    sample_noise,
    sample_preference,
)
from src.core.seeding import as_generator
from src.envs.layout import EnvSpec
from src.envs.oracle import pareto_range

logger = structlog.get_logger(__name__)

SplitName = Literal["train", "validation", "test"]
SPLITS: tuple[SplitName, ...] = ("train", "validation", "test")
STD_FLOOR = 1e-8


class Demonstration(BaseModel):
    model_config = ConfigDict(frozen=True)

    features: ReturnSummary
    target: PreferenceVector
    noise_eta: float = Field(ge=0.0)
    seed: int
    split: SplitName = "train"

    @field_validator("features", mode="before")
    @classmethod
    def coerce_features(cls, v: object) -> object:
        if isinstance(v, (list, tuple)):
            return {"returns": v}
        return v

    @field_validator("target", mode="before")
    @classmethod
    def coerce_target(cls, v: object) -> object:
        if isinstance(v, (list, tuple)):
            return {"weights": v}
        return v

    @model_validator(mode="after")
    def check_dimensions(self) -> "Demonstration":
        if self.features.m != self.target.m:
            raise ValueError("features and target disagree on objective count")
        return self


class DemoSet(BaseModel):
    """Demonstrations of one layout on one lattice, labelled by split"""

    model_config = ConfigDict(frozen=True)

    demos: tuple[Demonstration, ...]
    spec_hash: str
    lattice: dict[str, float | int]
    config_hash: Optional[str] = None

    @model_validator(mode="after")
    def check_shared_m(self) -> "DemoSet":
        ms = {d.target.m for d in self.demos}
        if len(ms) > 1:
            raise ValueError("demonstrations disagree on objective count")
        if ms and ms != {int(self.lattice.get("m", next(iter(ms))))}:
            raise ValueError("demonstrations disagree with the lattice objective count")
        return self

    @property
    def m(self) -> int:
        return int(self.lattice["m"])

    def __len__(self) -> int:
        return len(self.demos)

    def subset(self, name: SplitName) -> list[Demonstration]:
        return [d for d in self.demos if d.split == name]

    def split_sizes(self) -> dict[str, int]:
        return {name: len(self.subset(name)) for name in SPLITS}

    def features_matrix(self, name: Optional[SplitName] = None) -> np.ndarray:
        demos = self.demos if name is None else self.subset(name)
        return np.array([d.features.returns for d in demos], dtype=np.float64).reshape(-1, self.m)

    def targets_matrix(self, name: Optional[SplitName] = None) -> np.ndarray:
        demos = self.demos if name is None else self.subset(name)
        return np.array([d.target.weights for d in demos], dtype=np.float64).reshape(-1, self.m)


class FeatureStats(BaseModel):
    """Per-objective normaliser fitted on the train split"""

    model_config = ConfigDict(frozen=True)

    mean: tuple[float, ...]
    std: tuple[float, ...]

    @field_validator("std")
    @classmethod
    def check_std(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(not math.isfinite(x) or x <= 0.0 for x in v):
            raise ValueError("standard deviations must be finite and positive")
        return v

    def normalise(self, features: np.ndarray) -> np.ndarray:
        return (features - np.asarray(self.mean)) / np.asarray(self.std)


def noise_spec_for(spec: EnvSpec, eta: float) -> NoiseSpec:
    """Noise scaled by the spread of the layout's Pareto front"""
    return NoiseSpec(eta=eta, per_objective_range=pareto_range(spec))


def _one_demo(
    q: QTable,
    space: PreferenceSpace,
    noise: NoiseSpec,
    seed: int,
    episodes_per_demo: int,
) -> Demonstration:
    rng = as_generator(seed)
    w = sample_preference(space, rng)
    total = np.zeros(space.m, dtype=np.float64)
    for _ in range(episodes_per_demo):
        total += greedy_rollout(q, w, rng).as_array()
    clean = total / episodes_per_demo
    delta = sample_noise(noise, rng).as_array()
    features = ReturnSummary(returns=tuple((clean + delta).tolist()))
    return Demonstration(features=features, target=w, noise_eta=noise.eta, seed=seed)


def generate_demos(
    q: QTable,
    space: PreferenceSpace,
    noise: NoiseSpec,
    n: int,
    seed: int,
    workers: int = 1,
    episodes_per_demo: int = 1,
    config_hash: Optional[str] = None,
) -> DemoSet:
    """
    Build the supervised dataset of (noisy return, preference) pairs

    Demo ``i`` draws everything from its own stream seeded ``seed + i``, and
    results are collected in index order, so the set does not depend on
    ``workers``.

    Args:
        q: Trained agent
        space: Lattice to sample targets from (must be the agent's)
        noise: Sub-optimality noise
        n: Number of demonstrations
        seed: Base seed
        workers: Worker threads
        episodes_per_demo: Greedy episodes averaged per demonstration

    Returns:
        DemoSet: All demonstrations labelled ``train``
    """
    if n < 1:
        raise ConfigurationError("Demo count must be at least 1", details={"n": n})
    if episodes_per_demo < 1:
        raise ConfigurationError("episodes_per_demo must be at least 1")
    if space.descriptor() != q.space.descriptor():
        raise LatticeError(
            "Demo lattice differs from the agent's",
            details={"demo": space.descriptor(), "agent": q.space.descriptor()},
        )
    if noise.m != space.m:
        raise ConfigurationError("Noise ranges disagree with the objective count")

    logger.info("Generating demonstrations", n=n, eta=noise.eta, workers=workers)

    def build(i: int) -> Demonstration:
        return _one_demo(q, space, noise, seed + i, episodes_per_demo)

    if workers <= 1:
        demos = [build(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            demos = list(pool.map(build, range(n)))

    return DemoSet(
        demos=tuple(demos),
        spec_hash=q.spec.spec_hash(),
        lattice=space.descriptor(),
        config_hash=config_hash,
    )


def feature_stats(ds: DemoSet) -> FeatureStats:
    """
    Mean and population standard deviation of the train features

    Raises:
        EmptySplitError: no train demonstrations
    """
    train = ds.features_matrix("train")
    if train.shape[0] == 0:
        raise EmptySplitError("train")
    mean = train.mean(axis=0)
    std = np.maximum(train.std(axis=0), STD_FLOOR)
    return FeatureStats(mean=tuple(mean.tolist()), std=tuple(std.tolist()))


def _split_counts(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n into the fractions; ties favour earlier splits"""
    raw = [f * n for f in fractions]
    counts = [int(math.floor(x + 1e-9)) for x in raw]
    leftover = n - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def split(ds: DemoSet, fractions: Sequence[float], seed: int) -> DemoSet:
    """
    Stratified random partition into train/validation/test

    Demos are shuffled within their target group and interleaved across groups
    by relative rank, so the test split (filled first) then validation see one
    of every target before any target repeats.

    Raises:
        ConfigurationError: fractions are not three non-negative values summing to 1
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0.0 or not math.isfinite(f) for f in fractions):
        raise ConfigurationError("Split fractions must be three non-negative numbers")
    if abs(math.fsum(fractions) - 1.0) > 1e-9:
        raise ConfigurationError("Split fractions must sum to 1", details={"fractions": list(fractions)})

    n = len(ds)
    n_train, n_val, n_test = _split_counts(n, fractions)
    rng = as_generator(seed)

    groups: dict[tuple[float, ...], list[int]] = {}
    for i, d in enumerate(ds.demos):
        groups.setdefault(d.target.weights, []).append(i)

    ranked: list[tuple[float, int, int, int]] = []
    for g, key in enumerate(sorted(groups)):
        members = groups[key]
        order = rng.permutation(len(members))
        for k, pos in enumerate(order):
            ranked.append((k / len(members), g, k, members[int(pos)]))
    ranked.sort()

    labels: list[SplitName] = ["train"] * n
    for r, (_, _, _, i) in enumerate(ranked):
        if r < n_test:
            labels[i] = "test"
        elif r < n_test + n_val:
            labels[i] = "validation"

    demos = tuple(d.model_copy(update={"split": labels[i]}) for i, d in enumerate(ds.demos))
    logger.info("Demonstrations split", train=n_train, validation=n_val, test=n_test)
    return ds.model_copy(update={"demos": demos})
