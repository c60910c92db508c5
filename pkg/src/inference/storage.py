"""
Preference model artifacts

Binary layout (little-endian):
    magic b"DWPM" | version u16 | spec sha256 (32 bytes) | layer count u16
    | layer sizes u32 each | mean f64[m] | std f64[m]
    | per layer: weights f64 (row-major, in x out) then biases f64[out]

The JSON sidecar carries the lattice, fit config, loss curves and config hash.
"""

import struct
from pathlib import Path
from typing import Any, Optional

import numpy as np
import structlog

from src.core.errors import ArtifactError
from src.core.preferences import enumerate_simplex
from src.demos.dataset import FeatureStats
from src.inference.mlp import MlpModel
from src.utils.serialization import read_json, write_json

logger = structlog.get_logger(__name__)

MAGIC = b"DWPM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sH32sH")


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_model(model: MlpModel, path: Path, extra: Optional[dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    digest = bytes.fromhex(model.spec_hash) if model.spec_hash else bytes(32)
    chunks = [
        _PREFIX.pack(MAGIC, FORMAT_VERSION, digest, len(model.sizes)),
        struct.pack(f"<{len(model.sizes)}I", *model.sizes),
        np.asarray(model.stats.mean, dtype="<f8").tobytes(),
        np.asarray(model.stats.std, dtype="<f8").tobytes(),
    ]
    for w, b in zip(model.weights, model.biases):
        chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes(order="C"))
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    path.write_bytes(b"".join(chunks))

    sidecar = {
        "format_version": FORMAT_VERSION,
        "kind": "dwpi_model",
        "spec_hash": model.spec_hash,
        "sizes": list(model.sizes),
        "lattice": model.space.descriptor(),
    }
    if extra:
        sidecar.update(extra)
    write_json(sidecar_path(path), sidecar)
    logger.info("Preference model saved", path=str(path), parameters=model.n_parameters)
    return path


def load_model(path: Path, expected_spec_hash: Optional[str] = None) -> MlpModel:
    """
    Read a model written by ``save_model``

    Raises:
        ArtifactError: missing or truncated file, bad magic/version, or a
            spec hash other than ``expected_spec_hash``
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"Model file not found: {path}", details={"path": str(path)})
    if not sidecar_path(path).exists():
        raise ArtifactError(f"Model sidecar not found: {sidecar_path(path)}")
    raw = path.read_bytes()
    try:
        magic, version, digest, n_layers = _PREFIX.unpack_from(raw)
        if magic != MAGIC:
            raise ArtifactError("Not a preference model file", details={"path": str(path)})
        if version != FORMAT_VERSION:
            raise ArtifactError("Unsupported model format version", details={"version": version})
        offset = _PREFIX.size
        sizes = struct.unpack_from(f"<{n_layers}I", raw, offset)
        offset += 4 * n_layers
        m = sizes[0]

        def take(count: int) -> np.ndarray:
            nonlocal offset
            arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
            offset += 8 * count
            return arr

        mean, std = take(m), take(m)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(take(fan_in * fan_out).reshape(fan_in, fan_out))
            biases.append(take(fan_out))
    except (struct.error, ValueError) as e:
        raise ArtifactError("Model file is truncated or malformed", details={"path": str(path)}) from e
    if offset != len(raw):
        raise ArtifactError("Model file has trailing bytes", details={"path": str(path)})

    meta = read_json(sidecar_path(path))
    spec_hash = digest.hex() if any(digest) else ""
    if meta.get("spec_hash", "") != spec_hash:
        raise ArtifactError("Model sidecar disagrees with the binary spec hash")
    if expected_spec_hash is not None and spec_hash != expected_spec_hash:
        raise ArtifactError(
            "Model was trained on a different layout",
            details={"model": spec_hash, "expected": expected_spec_hash},
        )

    lattice = meta.get("lattice", {})
    space = enumerate_simplex(int(lattice.get("m", m)), float(lattice.get("grid_step", 0.1)))
    return MlpModel(
        sizes=tuple(sizes),
        weights=weights,
        biases=biases,
        stats=FeatureStats(mean=tuple(mean.tolist()), std=tuple(std.tolist())),
        space=space,
        spec_hash=spec_hash,
    )


def read_sidecar(path: Path) -> dict[str, Any]:
    return read_json(sidecar_path(Path(path)))
