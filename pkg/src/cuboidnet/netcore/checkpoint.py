"""Single-file checkpoints: one JSON header line, then raw float32 blocks.

Layout::

    {"schema": 1, "blocks": [[name, [shape...]], ...], "hyperparameters": {...},
     "seed": 0, "payload_sha256": "..."}\\n
    <little-endian float32 data for each block, in header order>

The header is written with sorted keys and no whitespace variation, so two
saves of the same parameters are byte-identical.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ChecksumError, ShapeMismatch
from .model import Model, ModelConfig

SCHEMA_VERSION = 1
_DTYPE = np.dtype("<f4")


def _payload(model):
    return b"".join(np.ascontiguousarray(a, dtype=_DTYPE).tobytes() for _, a in model.blocks())


def dumps(model, hyperparameters=None, seed=0):
    """Serialize ``model`` to bytes."""
    payload = _payload(model)
    header = {
        "schema": SCHEMA_VERSION,
        "blocks": [[name, list(a.shape)] for name, a in model.blocks()],
        "model": model.config.as_dict(),
        "hyperparameters": hyperparameters or {},
        "seed": int(seed),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":"))
    return line.encode("utf-8") + b"\n" + payload


def save(path, model, hyperparameters=None, seed=0):
    Path(path).write_bytes(dumps(model, hyperparameters, seed))


def loads(data):
    """Inverse of :func:`dumps`; returns ``(model, header)``.

    Raises ChecksumError for a missing/garbled header, truncated payload or
    hash mismatch, and ShapeMismatch if the declared blocks do not fit the
    declared model configuration.
    """
    newline = data.find(b"\n")
    if newline < 0:
        raise ChecksumError("checkpoint has no header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
        blocks = [(str(n), tuple(int(d) for d in shape)) for n, shape in header["blocks"]]
        config = ModelConfig(**header["model"])
        expected_hash = header["payload_sha256"]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise ChecksumError(f"malformed checkpoint header: {exc}") from exc
    if header.get("schema") != SCHEMA_VERSION:
        raise ChecksumError(f"unsupported checkpoint schema {header.get('schema')!r}")
    payload = data[newline + 1:]
    if hashlib.sha256(payload).hexdigest() != expected_hash:
        raise ChecksumError("checkpoint payload does not match its checksum")

    model = Model(config)
    want = model.expected_shapes()
    got = dict(blocks)
    if set(got) != set(want):
        raise ShapeMismatch(f"checkpoint blocks {sorted(got)} do not match model blocks {sorted(want)}")
    offset = 0
    for name, shape in blocks:
        if shape != want[name]:
            raise ShapeMismatch(f"{name}: checkpoint shape {shape} != expected {want[name]}")
        n = int(np.prod(shape)) * _DTYPE.itemsize
        if offset + n > len(payload):
            raise ChecksumError("checkpoint payload is truncated")
        arr = np.frombuffer(payload, dtype=_DTYPE, count=n // _DTYPE.itemsize, offset=offset)
        group, key = name.split(".", 1)
        getattr(model, group)[key] = arr.astype(float).reshape(shape)
        offset += n
    if offset != len(payload):
        raise ChecksumError("checkpoint payload has trailing bytes")
    return model, header


def load(path):
    return loads(Path(path).read_bytes())
