"""
Pipeline run configuration

A single JSON document configures every stage. Stream seeds are derived from
the master ``seed``; stage hashes tie each artifact to the part of the config
that produced it.
"""

from functools import cached_property
from pathlib import Path
from typing import Any, Literal, Optional

import orjson
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.agents.qlearning import TrainConfig
from src.baselines.common import BaselineConfig
from src.config import get_settings
from src.core.errors import ConfigurationError
from src.core.preferences import PreferenceSpace, enumerate_simplex
from src.core.seeding import derive_seed
from src.envs.layout import DeepSeaSpec, ItemGatheringSpec, default_spec, load_env_spec
from src.eval.benchmark import EvalConfig
from src.inference.mlp import FitConfig
from src.utils.serialization import content_hash, validation_messages

logger = structlog.get_logger(__name__)

DEFAULT_EPISODES = {"cdst": 200_000, "item_gathering": 500_000}


class RunConfig(BaseModel):
    """Everything one pipeline run needs"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    environment: Literal["cdst", "item_gathering"] = "cdst"
    layout_path: Optional[Path] = Field(default=None, description="Layout JSON; None uses the shipped default")
    episode_cap: Optional[int] = Field(default=None, ge=1, description="Step cap replacing the layout's own")
    grid_step: float = Field(default=0.1, gt=0.0, le=1.0)
    train: TrainConfig = Field(default_factory=TrainConfig)
    noise_eta: float = Field(default=0.0, ge=0.0, description="Noise level for gen-demos")
    n_demos: int = Field(default=5000, ge=1)
    episodes_per_demo: int = Field(default=1, ge=1)
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    fit: FitConfig = Field(default_factory=FitConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    out_dir: Path = Field(default_factory=lambda: get_settings().artifact_dir / "default")
    seed: int = Field(default=0, ge=0, description="Master seed; every stream seed derives from it")
    workers: int = Field(default_factory=lambda: get_settings().default_workers, ge=1)

    @model_validator(mode="before")
    @classmethod
    def default_episodes(cls, data: Any) -> Any:
        if isinstance(data, dict):
            env = data.get("environment", "cdst")
            train = data.get("train")
            if isinstance(train, dict) and "episodes" not in train:
                data = {**data, "train": {**train, "episodes": DEFAULT_EPISODES.get(env, 200_000)}}
            elif train is None:
                data = {**data, "train": {"episodes": DEFAULT_EPISODES.get(env, 200_000)}}
        return data

    @field_validator("layout_path")
    @classmethod
    def layout_exists(cls, v: Optional[Path]) -> Optional[Path]:
        if v is not None and not Path(v).exists():
            raise ValueError(f"layout file not found: {v}")
        return v

    @field_validator("split")
    @classmethod
    def split_sums_to_one(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(f < 0.0 for f in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError("split fractions must be non-negative and sum to 1")
        return v

    @cached_property
    def spec(self) -> DeepSeaSpec | ItemGatheringSpec:
        spec = load_env_spec(self.layout_path) if self.layout_path else default_spec(self.environment)
        if spec.name != self.environment:
            raise ConfigurationError(
                "Layout file describes another environment",
                details={"layout": spec.name, "environment": self.environment},
            )
        if self.episode_cap is not None:
            spec = spec.model_copy(update={"episode_cap": self.episode_cap})
        return spec

    @cached_property
    def space(self) -> PreferenceSpace:
        return enumerate_simplex(self.spec.m, self.grid_step)

    def config_hash(self) -> str:
        return content_hash(self.model_dump(mode="json"))

    def stream_seed(self, *labels: object) -> int:
        return derive_seed(self.seed, *labels)

    def agent_hash(self) -> str:
        return content_hash(
            {
                "spec": self.spec.spec_hash(),
                "grid_step": self.grid_step,
                "train": self.train.model_dump(mode="json"),
                "seed": self.seed,
            }
        )

    def demos_hash(self, eta: float) -> str:
        return content_hash(
            {
                "agent": self.agent_hash(),
                "eta": eta,
                "n_demos": self.n_demos,
                "episodes_per_demo": self.episodes_per_demo,
                "split": list(self.split),
            }
        )

    def model_hash(self, eta: float) -> str:
        return content_hash({"demos": self.demos_hash(eta), "fit": self.fit.model_dump(mode="json")})

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with CLI overrides applied (None values are ignored) and revalidated"""
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        return parse_run_config({**self.model_dump(mode="json"), **_jsonable(updates)})


def _jsonable(values: dict[str, Any]) -> dict[str, Any]:
    return {k: str(v) if isinstance(v, Path) else v for k, v in values.items()}


def parse_run_config(document: dict[str, Any]) -> RunConfig:
    """
    Raises:
        ConfigurationError: the document does not validate
    """
    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(
            "Invalid run configuration", details={"errors": validation_messages(e)}
        ) from e


def load_run_config(path: Optional[Path]) -> RunConfig:
    """
    Read a run config; ``None`` gives the defaults

    Raises:
        ConfigurationError: missing file, invalid JSON or failed validation
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}", details={"path": str(path)})
    try:
        document = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as e:
        raise ConfigurationError(f"Config file is not valid JSON: {path}", details={"error": str(e)}) from e
    if not isinstance(document, dict):
        raise ConfigurationError(f"Config file must hold a JSON object: {path}")
    logger.debug("Run config loaded", path=str(path))
    return parse_run_config(document)
