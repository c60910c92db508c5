"""
JSON Lines persistence for demonstration sets

Line 1 is a header (kind, format version, spec hash, lattice, count, config
hash); every following line is one demonstration.
"""

from pathlib import Path
from typing import Optional

import orjson
import structlog
from pydantic import ValidationError

from src.core.errors import ArtifactError, DWPIError
from src.demos.dataset import Demonstration, DemoSet
from src.envs.layout import EnvSpec
from src.utils.serialization import dumps, validation_messages

logger = structlog.get_logger(__name__)

FORMAT_VERSION = 1


def save_demos(ds: DemoSet, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "kind": "demos",
        "format_version": FORMAT_VERSION,
        "spec_hash": ds.spec_hash,
        "lattice": ds.lattice,
        "count": len(ds),
        "config_hash": ds.config_hash,
    }
    lines = [dumps(header)]
    for d in ds.demos:
        lines.append(
            dumps(
                {
                    "features": list(d.features.returns),
                    "target": list(d.target.weights),
                    "noise_eta": d.noise_eta,
                    "seed": d.seed,
                    "split": d.split,
                }
            )
        )
    path.write_bytes(b"\n".join(lines) + b"\n")
    logger.info("Demonstrations saved", path=str(path), count=len(ds))
    return path


def load_demos(path: Path, expected_spec: Optional[EnvSpec] = None) -> DemoSet:
    """
    Read a demo file written by ``save_demos``

    Raises:
        ArtifactError: missing file, corrupt line (1-based line number in the
            message), count mismatch or a foreign spec hash
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"Demo file not found: {path}", details={"path": str(path)})

    lines = path.read_bytes().splitlines()
    if not lines:
        raise ArtifactError(f"Demo file is empty: {path}")
    try:
        header = orjson.loads(lines[0])
        if header.get("kind") != "demos" or header.get("format_version") != FORMAT_VERSION:
            raise ValueError("not a demo file header")
    except (orjson.JSONDecodeError, ValueError, AttributeError) as e:
        raise ArtifactError(f"Corrupt demo header on line 1 of {path}", details={"line": 1}) from e

    demos = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            demos.append(Demonstration.model_validate(orjson.loads(line)))
        except orjson.JSONDecodeError as e:
            raise ArtifactError(
                f"Corrupt demo on line {lineno} of {path}: invalid JSON", details={"line": lineno}
            ) from e
        except ValidationError as e:
            raise ArtifactError(
                f"Corrupt demo on line {lineno} of {path}",
                details={"line": lineno, "errors": validation_messages(e)},
            ) from e
        except DWPIError as e:
            raise ArtifactError(
                f"Corrupt demo on line {lineno} of {path}: {e.message}", details={"line": lineno}
            ) from e

    if header.get("count") is not None and header["count"] != len(demos):
        raise ArtifactError(
            "Demo count does not match the header",
            details={"expected": header["count"], "actual": len(demos)},
        )
    if expected_spec is not None and header.get("spec_hash") != expected_spec.spec_hash():
        raise ArtifactError(
            "Demonstrations were generated on a different layout",
            details={"demos": header.get("spec_hash"), "expected": expected_spec.spec_hash()},
        )
    try:
        return DemoSet(
            demos=tuple(demos),
            spec_hash=header["spec_hash"],
            lattice=header["lattice"],
            config_hash=header.get("config_hash"),
        )
    except (KeyError, ValidationError) as e:
        raise ArtifactError(f"Inconsistent demo file {path}") from e
