import hashlib
import json
import os
from pathlib import Path

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(root: int, *parts) -> int:
    """Deterministic 64-bit child seed from a root seed and any printable parts."""
    h = hashlib.sha256(str(int(root) & SEED_MASK).encode())
    for p in parts:
        h.update(b"\x1f")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & SEED_MASK)


def sk_seed(seed: int) -> int:
    # sklearn random_state must fit in 32 bits
    return int(seed) % (2**32)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def worker_count() -> int:
    raw = os.environ.get("AMLF_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def jsonable(value):
    """Coerce numpy scalars / arrays into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value
