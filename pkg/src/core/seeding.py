"""
Seed handling: every random stream is derived from an explicit seed
"""

import hashlib
from typing import Union

import numpy as np

Seed = Union[int, np.random.Generator]


def as_generator(seed: Seed) -> np.random.Generator:
    """Wrap an int seed in a fresh Generator; a Generator is returned unchanged"""
    return np.random.default_rng(seed)


def derive_seed(master: int, *labels: object) -> int:
    """
    Derive a stable 63-bit stream seed from a master seed and labels

    Example:
        derive_seed(7, "demos", "eta=0.05")
    """
    text = "/".join([str(master), *(str(label) for label in labels)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)
