"""
Preference vectors, vector rewards, linear scalarization and simplex lattices

These are the value types every other package shares. All of them are frozen
pydantic models; RNG state is always owned by the caller.
"""

import itertools
import math
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.errors import DimensionMismatchError, LatticeError, SimplexError
from src.core.seeding import Seed, as_generator

SIMPLEX_TOL = 1e-9


class PreferenceVector(BaseModel):
    """Point on the probability simplex: the weights of a linear scalarization"""

    model_config = ConfigDict(frozen=True)

    weights: tuple[float, ...]

    @field_validator("weights", mode="before")
    @classmethod
    def validate_simplex(cls, v: Iterable[float]) -> tuple[float, ...]:
        weights = tuple(float(x) for x in v)
        if len(weights) < 2:
            raise SimplexError("A preference needs at least two objectives", weights)
        if not all(math.isfinite(x) for x in weights):
            raise SimplexError("Preference contains non-finite weights", weights)
        if min(weights) < 0.0:
            raise SimplexError("Preference weights must be non-negative", weights)
        if abs(math.fsum(weights) - 1.0) > SIMPLEX_TOL:
            raise SimplexError("Preference weights must sum to 1", weights)
        return weights

    @classmethod
    def normalised(cls, values: Sequence[float]) -> "PreferenceVector":
        """
        Build a preference from raw non-negative values

        Components in [-1e-9, 0) are treated as rounding drift and clipped.

        Raises:
            SimplexError: negative components, or all components zero
        """
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise SimplexError("Preference values must be a finite vector", arr.tolist())
        if np.any(arr < -SIMPLEX_TOL):
            raise SimplexError("Preference values must be non-negative", arr.tolist())
        arr = np.clip(arr, 0.0, None)
        total = arr.sum()
        if total <= 0.0:
            raise SimplexError("Preference values are all zero", arr.tolist())
        return cls(weights=tuple((arr / total).tolist()))

    @classmethod
    def uniform(cls, m: int) -> "PreferenceVector":
        return cls(weights=tuple([1.0 / m] * m))

    @property
    def m(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    def to_json(self) -> list[float]:
        return list(self.weights)


class RewardVector(BaseModel):
    """Per-objective instantaneous reward (environment units)"""

    model_config = ConfigDict(frozen=True)

    rewards: tuple[float, ...]

    @field_validator("rewards", mode="before")
    @classmethod
    def validate_rewards(cls, v: Iterable[float]) -> tuple[float, ...]:
        rewards = tuple(float(x) for x in v)
        if not all(math.isfinite(x) for x in rewards):
            raise ValueError("reward components must be finite")
        return rewards

    @classmethod
    def zeros(cls, m: int) -> "RewardVector":
        return cls(rewards=(0.0,) * m)

    @property
    def m(self) -> int:
        return len(self.rewards)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rewards, dtype=np.float64)

    def to_json(self) -> list[float]:
        return list(self.rewards)


class ReturnSummary(BaseModel):
    """Undiscounted per-objective episode return; the reward trajectory of one demonstration"""

    model_config = ConfigDict(frozen=True)

    returns: tuple[float, ...]

    @field_validator("returns", mode="before")
    @classmethod
    def validate_returns(cls, v: Iterable[float]) -> tuple[float, ...]:
        returns = tuple(float(x) for x in v)
        if not returns:
            raise ValueError("a return summary needs at least one objective")
        if not all(math.isfinite(x) for x in returns):
            raise ValueError("return components must be finite")
        return returns

    @property
    def m(self) -> int:
        return len(self.returns)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.returns, dtype=np.float64)

    def to_json(self) -> list[float]:
        return list(self.returns)


VectorLike = Union[RewardVector, ReturnSummary, Sequence[float], np.ndarray]


def _as_vector(r: VectorLike) -> np.ndarray:
    if isinstance(r, (RewardVector, ReturnSummary)):
        return r.as_array()
    return np.asarray(r, dtype=np.float64)


def scalarize(w: PreferenceVector, r: VectorLike) -> float:
    """
    Linear scalarization w·r

    Raises:
        DimensionMismatchError: if w and r have different lengths
    """
    vec = _as_vector(r)
    if vec.shape != (w.m,):
        raise DimensionMismatchError(w.m, int(vec.size), "reward")
    return float(math.fsum(wi * ri for wi, ri in zip(w.weights, vec.tolist())))


class PreferenceSpace(BaseModel):
    """Simplex lattice: all vectors with components in {0, step, ..., 1} summing to 1"""

    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=2)
    grid_step: float = Field(gt=0.0, le=1.0)
    points: tuple[PreferenceVector, ...]

    @model_validator(mode="after")
    def check_points(self) -> "PreferenceSpace":
        if not self.points:
            raise LatticeError("Preference space has no points")
        if any(p.m != self.m for p in self.points):
            raise LatticeError("Lattice points disagree on objective count")
        return self

    @property
    def divisions(self) -> int:
        return int(round(1.0 / self.grid_step))

    @cached_property
    def matrix(self) -> np.ndarray:
        """Lattice as a read-only (n_points, m) array"""
        mat = np.array([p.weights for p in self.points], dtype=np.float64)
        mat.setflags(write=False)
        return mat

    def __len__(self) -> int:
        return len(self.points)

    def descriptor(self) -> dict[str, float | int]:
        return {"m": self.m, "grid_step": self.grid_step}

    def snap(self, w: PreferenceVector | Sequence[float]) -> tuple[int, PreferenceVector, float]:
        """
        Euclidean nearest lattice point; ties go to the lowest index

        Returns:
            (index, lattice point, distance)
        """
        vec = np.asarray(w.weights if isinstance(w, PreferenceVector) else w, dtype=np.float64)
        if vec.shape != (self.m,):
            raise DimensionMismatchError(self.m, int(vec.size), "preference")
        dist = np.linalg.norm(self.matrix - vec, axis=1)
        idx = int(np.argmin(dist))
        return idx, self.points[idx], float(dist[idx])

    def index_of(self, w: PreferenceVector, tol: float = 1e-9) -> int:
        """Exact lattice index of ``w`` (within ``tol``)"""
        idx, _, dist = self.snap(w)
        if dist > tol:
            raise LatticeError(
                "Preference is not a lattice point",
                details={"weights": w.to_json(), "distance": dist},
            )
        return idx


def enumerate_simplex(m: int, grid_step: float) -> PreferenceSpace:
    """
    Enumerate the simplex lattice

    Args:
        m: Objective count (>= 2)
        grid_step: Lattice spacing; 1/grid_step must be an integer

    Returns:
        PreferenceSpace: C(1/grid_step + m - 1, m - 1) points in ascending
        lexicographic order

    Raises:
        LatticeError: invalid m or non-integer reciprocal step
    """
    if m < 2:
        raise LatticeError("Objective count must be at least 2", details={"m": m})
    if not (0.0 < grid_step <= 1.0):
        raise LatticeError("grid_step must lie in (0, 1]", details={"grid_step": grid_step})
    inverse = 1.0 / grid_step
    divisions = int(round(inverse))
    if abs(inverse - divisions) > SIMPLEX_TOL:
        raise LatticeError(
            "1/grid_step must be an integer",
            details={"grid_step": grid_step, "inverse": inverse},
        )

    compositions = []
    # stars and bars: choose m-1 bar positions among divisions+m-1 slots
    for bars in itertools.combinations(range(divisions + m - 1), m - 1):
        counts = []
        prev = -1
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(divisions + m - 2 - prev)
        compositions.append(tuple(counts))
    compositions.sort()

    points = tuple(
        PreferenceVector(weights=tuple(c / divisions for c in counts))
        for counts in compositions
    )
    return PreferenceSpace(m=m, grid_step=grid_step, points=points)


def sample_preference_index(space: PreferenceSpace, rng_seed: Seed) -> int:
    rng = as_generator(rng_seed)
    return int(rng.integers(len(space.points)))


def sample_preference(space: PreferenceSpace, rng_seed: Seed) -> PreferenceVector:
    """Uniform draw from the lattice; deterministic given the seed"""
    return space.points[sample_preference_index(space, rng_seed)]


class NoiseSpec(BaseModel):
    """Additive uniform sub-optimality noise, scaled per objective by its return range"""

    model_config = ConfigDict(frozen=True)

    eta: float = Field(ge=0.0, description="Noise half-width as a fraction of each range")
    per_objective_range: tuple[float, ...]

    @field_validator("per_objective_range", mode="before")
    @classmethod
    def validate_ranges(cls, v: Iterable[float]) -> tuple[float, ...]:
        ranges = tuple(float(x) for x in v)
        if not ranges:
            raise ValueError("per_objective_range must not be empty")
        if any(not math.isfinite(x) or x <= 0.0 for x in ranges):
            raise ValueError("every objective range must be finite and > 0")
        return ranges

    @property
    def m(self) -> int:
        return len(self.per_objective_range)

    def half_widths(self) -> np.ndarray:
        return self.eta * np.asarray(self.per_objective_range, dtype=np.float64)


def sample_noise(spec: NoiseSpec, rng_seed: Seed) -> RewardVector:
    """
    Draw one noise vector, component i uniform in [-eta*range_i, +eta*range_i]

    The draw always consumes m uniforms so streams stay aligned across eta values.
    """
    rng = as_generator(rng_seed)
    half = spec.half_widths()
    u = rng.uniform(-1.0, 1.0, size=spec.m)
    return RewardVector(rewards=tuple((u * half).tolist()))


def pareto_filter(vectors: Iterable[Sequence[float]]) -> list[tuple[float, ...]]:
    """
    Non-dominated subset (maximisation), deduplicated, in ascending lexicographic order
    """
    unique = sorted({tuple(float(x) for x in v) for v in vectors})
    front = []
    for v in unique:
        dominated = False
        for u in unique:
            if u != v and all(a >= b for a, b in zip(u, v)):
                dominated = True
                break
        if not dominated:
            front.append(v)
    return front
