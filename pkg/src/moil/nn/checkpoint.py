"""Deterministic binary checkpoint container.

Layout: 8-byte magic, u64 header length, UTF-8 JSON header, then the raw
little-endian array payload.  The header carries a free-form ``meta`` dict
(layer topology, seed, upstream hashes) plus an index of array names,
dtypes, shapes, and offsets.  Identical inputs produce byte-identical
files: arrays are written in sorted name order and the header JSON uses
sorted keys; nothing time-dependent is stored.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from ..errors import ArtifactError
from .layers import Layer

_MAGIC = b"MOILCKP1"
_DTYPES = {"float64": "<f8", "int64": "<i8"}


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    index = []
    payload = bytearray()
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.name not in _DTYPES:
            raise ArtifactError(f"unsupported checkpoint dtype {arr.dtype} for {name!r}")
        blob = arr.astype(_DTYPES[arr.dtype.name]).tobytes()
        index.append(
            {
                "name": name,
                "dtype": arr.dtype.name,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": len(blob),
            }
        )
        payload.extend(blob)
    header = json.dumps(
        {"version": 1, "meta": meta, "arrays": index},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(payload)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != _MAGIC:
                raise ArtifactError(f"{path}: not a checkpoint file")
            (header_len,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(header_len).decode("utf-8"))
            payload = fh.read()
    except OSError as exc:
        raise ArtifactError(f"cannot read checkpoint {path}: {exc}") from exc
    if header.get("version") != 1:
        raise ArtifactError(f"{path}: unsupported checkpoint version")
    arrays = {}
    for entry in header["arrays"]:
        blob = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(blob, dtype=_DTYPES[entry["dtype"]]).astype(entry["dtype"])
        arrays[entry["name"]] = arr.reshape(entry["shape"])
    return arrays, header["meta"]


def model_state(model: Layer) -> dict[str, np.ndarray]:
    """All parameter values and buffers of a model, keyed by qualified name."""
    state = {f"param.{name}": p.value for name, p in model.param_items()}
    state.update({f"buffer.{name}": b for name, b in model.buffer_items()})
    return state


def load_model_state(model: Layer, arrays: dict[str, np.ndarray]) -> None:
    params = dict(model.param_items())
    seen = set()
    for name, value in arrays.items():
        kind, _, rest = name.partition(".")
        if kind == "param":
            if rest not in params:
                raise ArtifactError(f"checkpoint parameter {rest!r} not in model")
            if params[rest].value.shape != value.shape:
                raise ArtifactError(
                    f"shape mismatch for {rest!r}: "
                    f"{params[rest].value.shape} vs {value.shape}"
                )
            params[rest].value[...] = value
            seen.add(rest)
        elif kind == "buffer":
            model.set_buffer(rest, value.copy())
        else:
            raise ArtifactError(f"unknown state entry {name!r}")
    missing = set(params) - seen
    if missing:
        raise ArtifactError(f"checkpoint missing parameters: {sorted(missing)[:5]}")


def params_hash(model: Layer) -> str:
    """SHA-256 over every parameter and buffer (names, shapes, raw bytes)."""
    digest = hashlib.sha256()
    state = model_state(model)
    for name in sorted(state):
        arr = np.ascontiguousarray(state[name])
        digest.update(name.encode())
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()
