"""
Environment specifications and layout loading

Layouts are JSON documents validated into frozen pydantic models. The ``name``
field selects the environment.
"""

from collections import deque
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from src.config import get_settings
from src.core.errors import ArtifactError, ConfigurationError
from src.utils.serialization import content_hash, read_json, validation_messages

Cell = tuple[int, int]

COLORS = ("green", "red", "yellow")

# up, down, left, right
MOVES: tuple[Cell, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))


class Treasure(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    row: int = Field(ge=0)
    col: int = Field(ge=0)
    value: float = Field(gt=0.0)

    @property
    def cell(self) -> Cell:
        return (self.row, self.col)


class Item(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    row: int = Field(ge=0)
    col: int = Field(ge=0)
    color: Literal["green", "red", "yellow"]

    @property
    def cell(self) -> Cell:
        return (self.row, self.col)

    @property
    def color_index(self) -> int:
        return COLORS.index(self.color)


class EnvSpec(BaseModel):
    """Common part of every gridworld specification"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    rows: int = Field(ge=1, le=64)
    cols: int = Field(ge=1, le=64)
    start: Cell = (0, 0)
    episode_cap: int = Field(ge=1, description="Maximum steps per episode")
    discount: float = Field(gt=0.0, le=1.0, description="Discount used only inside Q-learning backups")

    @property
    def actions(self) -> int:
        return len(MOVES)

    @property
    def m(self) -> int:
        raise NotImplementedError

    def in_grid(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.rows and 0 <= cell[1] < self.cols

    def spec_hash(self) -> str:
        return content_hash(self.model_dump(mode="json"))


class DeepSeaSpec(EnvSpec):
    """Convex Deep Sea Treasure: submarine, seabed walls, treasures valued by depth"""

    name: Literal["cdst"] = "cdst"
    walls: tuple[Cell, ...] = ()
    treasures: tuple[Treasure, ...]

    @property
    def m(self) -> int:
        return 2

    @model_validator(mode="after")
    def check_layout(self) -> "DeepSeaSpec":
        if not self.treasures:
            raise ValueError("at least one treasure is required")
        if not self.in_grid(self.start):
            raise ValueError("start cell outside the grid")
        walls = set(self.walls)
        if self.start in walls:
            raise ValueError("start cell is a wall")
        cells = [t.cell for t in self.treasures]
        if len(set(cells)) != len(cells):
            raise ValueError("treasure cells must be distinct")
        for t in self.treasures:
            if not self.in_grid(t.cell):
                raise ValueError(f"treasure {t.cell} outside the grid")
            if t.cell in walls or t.cell == self.start:
                raise ValueError(f"treasure {t.cell} overlaps a wall or the start")

        ordered = sorted(self.treasures, key=lambda t: (t.row, t.col))
        for shallow, deep in zip(ordered, ordered[1:]):
            if deep.value <= shallow.value:
                raise ValueError("treasure values must strictly increase with depth")

        unreachable = set(cells) - _reachable(self, walls, set(cells))
        if unreachable:
            raise ValueError(f"treasures unreachable from start: {sorted(unreachable)}")
        return self

    def treasure_at(self) -> dict[Cell, float]:
        return {t.cell: t.value for t in self.treasures}


class ItemGatheringSpec(EnvSpec):
    """Item Gathering: collect coloured items on an open grid"""

    name: Literal["item_gathering"] = "item_gathering"
    items: tuple[Item, ...]
    randomize_items: bool = False

    @property
    def m(self) -> int:
        return len(COLORS)

    @model_validator(mode="after")
    def check_layout(self) -> "ItemGatheringSpec":
        if not self.in_grid(self.start):
            raise ValueError("start cell outside the grid")
        if len(self.items) > 16:
            raise ValueError("at most 16 items are supported")
        cells = [i.cell for i in self.items]
        if len(set(cells)) != len(cells):
            raise ValueError("item cells must be distinct")
        for item in self.items:
            if not self.in_grid(item.cell):
                raise ValueError(f"item {item.cell} outside the grid")
            if item.cell == self.start:
                raise ValueError("an item may not sit on the start cell")
        for color in COLORS:
            if not any(i.color == color for i in self.items):
                raise ValueError(f"at least one {color} item is required")
        if len(self.items) >= self.rows * self.cols:
            raise ValueError("grid too small for the items")
        return self

    def color_counts(self) -> tuple[int, ...]:
        return tuple(sum(1 for i in self.items if i.color == c) for c in COLORS)


AnyEnvSpec = Annotated[Union[DeepSeaSpec, ItemGatheringSpec], Field(discriminator="name")]
_spec_adapter: TypeAdapter[DeepSeaSpec | ItemGatheringSpec] = TypeAdapter(AnyEnvSpec)


def _reachable(spec: DeepSeaSpec, walls: set[Cell], terminals: set[Cell]) -> set[Cell]:
    seen = {spec.start}
    queue = deque([spec.start])
    while queue:
        cell = queue.popleft()
        if cell in terminals:
            continue
        for dr, dc in MOVES:
            nxt = (cell[0] + dr, cell[1] + dc)
            if spec.in_grid(nxt) and nxt not in walls and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def parse_env_spec(document: dict) -> DeepSeaSpec | ItemGatheringSpec:
    """Validate a layout document"""
    try:
        return _spec_adapter.validate_python(document)
    except ValidationError as e:
        raise ConfigurationError(
            "Invalid environment layout", details={"errors": validation_messages(e)}
        ) from e


def load_env_spec(path: Path) -> DeepSeaSpec | ItemGatheringSpec:
    """
    Load a layout JSON file

    Raises:
        ConfigurationError: missing file or invalid layout
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Layout file not found: {path}", details={"path": str(path)})
    try:
        document = read_json(path)
    except Exception as e:
        raise ArtifactError(f"Layout file is not valid JSON: {path}", details={"path": str(path)}) from e
    return parse_env_spec(document)


def default_layout_path(name: str) -> Path:
    files = {"cdst": "cdst_default.json", "item_gathering": "item_gathering_default.json"}
    if name not in files:
        raise ConfigurationError(f"Unknown environment '{name}'", details={"known": sorted(files)})
    return get_settings().data_dir / files[name]


def default_spec(name: str) -> DeepSeaSpec | ItemGatheringSpec:
    """Shipped default layout for ``name``"""
    return load_env_spec(default_layout_path(name))
