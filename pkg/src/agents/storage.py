"""
QTable artifacts

Binary layout (little-endian):
    magic b"DWQT" | version u16 | spec sha256 (32 bytes) | m u16 | divisions u32
    | states u32 | preferences u32 | actions u32 | float64 values, row-major

A JSON sidecar (same stem, ``.json``) carries the layout, lattice, training
config and the hash of the run config that produced the table.
"""

import struct
from pathlib import Path
from typing import Any, Optional

import numpy as np
import structlog
from pydantic import ValidationError

from src.agents.dwrl import QTable
from src.agents.qlearning import TrainConfig
from src.core.errors import ArtifactError
from src.core.preferences import enumerate_simplex
from src.envs.layout import EnvSpec, parse_env_spec
from src.utils.serialization import read_json, validation_messages, write_json

logger = structlog.get_logger(__name__)

MAGIC = b"DWQT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sH32sHIIII")


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_qtable(q: QTable, path: Path, config_hash: Optional[str] = None, extra: Optional[dict[str, Any]] = None) -> Path:
    """Write the binary table and its sidecar; returns the binary path"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    spec_hash = q.spec.spec_hash()
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        bytes.fromhex(spec_hash),
        q.space.m,
        q.space.divisions,
        q.n_states,
        q.n_preferences,
        q.n_actions,
    )
    body = np.ascontiguousarray(q.values, dtype="<f8").tobytes(order="C")
    path.write_bytes(header + body)

    sidecar = {
        "format_version": FORMAT_VERSION,
        "kind": "qtable",
        "spec_hash": spec_hash,
        "spec": q.spec.model_dump(mode="json"),
        "lattice": q.space.descriptor(),
        "train_config": q.train_config.model_dump(mode="json"),
        "config_hash": config_hash,
    }
    if extra:
        sidecar.update(extra)
    write_json(sidecar_path(path), sidecar)
    logger.info("Agent saved", path=str(path), spec_hash=spec_hash[:12])
    return path


def load_qtable(path: Path, expected_spec: Optional[EnvSpec] = None) -> QTable:
    """
    Read a table written by ``save_qtable``

    Raises:
        ArtifactError: missing file, bad magic/version, truncated body, or a
            spec hash that disagrees with the sidecar or ``expected_spec``
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"Agent file not found: {path}", details={"path": str(path)})
    if not sidecar_path(path).exists():
        raise ArtifactError(f"Agent sidecar not found: {sidecar_path(path)}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ArtifactError("Agent file is truncated", details={"path": str(path)})
    magic, version, digest, m, divisions, n_states, n_prefs, n_actions = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ArtifactError("Not an agent file", details={"path": str(path), "magic": magic.hex()})
    if version != FORMAT_VERSION:
        raise ArtifactError("Unsupported agent format version", details={"version": version})

    body = raw[_HEADER.size:]
    expected_bytes = n_states * n_prefs * n_actions * 8
    if len(body) != expected_bytes:
        raise ArtifactError(
            "Agent body size does not match its header",
            details={"expected": expected_bytes, "actual": len(body)},
        )

    meta = read_json(sidecar_path(path))
    try:
        spec = parse_env_spec(meta["spec"])
        train_config = TrainConfig.model_validate(meta.get("train_config", {}))
    except (KeyError, ValidationError) as e:
        details = {"errors": validation_messages(e)} if isinstance(e, ValidationError) else {}
        raise ArtifactError("Agent sidecar is malformed", details=details) from e

    header_hash = digest.hex()
    if spec.spec_hash() != header_hash or meta.get("spec_hash") != header_hash:
        raise ArtifactError(
            "Agent spec hash does not match its layout",
            details={"header": header_hash, "sidecar": meta.get("spec_hash")},
        )
    if expected_spec is not None and expected_spec.spec_hash() != header_hash:
        raise ArtifactError(
            "Agent was trained on a different layout",
            details={"agent": header_hash, "expected": expected_spec.spec_hash()},
        )

    lattice = meta.get("lattice", {})
    space = enumerate_simplex(int(lattice.get("m", m)), float(lattice.get("grid_step", 1.0 / divisions)))
    if space.divisions != divisions or len(space) != n_prefs:
        raise ArtifactError("Agent lattice does not match its header")

    values = np.frombuffer(body, dtype="<f8").reshape(n_states, n_prefs, n_actions)
    return QTable(values=values, space=space, spec=spec, train_config=train_config)


def read_sidecar(path: Path) -> dict[str, Any]:
    return read_json(sidecar_path(Path(path)))
