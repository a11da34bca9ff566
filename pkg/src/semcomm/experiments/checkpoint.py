"""Binary checkpoint format.

Layout: ``MAGIC`` (8 bytes), header length as little-endian uint64, a UTF-8
JSON header, then every tensor's raw row-major little-endian bytes in header
order. The header carries the format version, the config hash, training
provenance and a table of ``(name, dtype, shape, offset, nbytes)`` entries.
"""
from __future__ import annotations

import json
import struct
import warnings
from pathlib import Path

import numpy as np
import torch

MAGIC = b"SEMCKPT\x00"
FORMAT_VERSION = 1

_DTYPES = {
    torch.float32: "<f4",
    torch.float64: "<f8",
    torch.float16: "<f2",
    torch.int64: "<i8",
    torch.int32: "<i4",
    torch.uint8: "|u1",
    torch.bool: "|b1",
    torch.complex64: "<c8",
    torch.complex128: "<c16",
}
_TORCH = {v: k for k, v in _DTYPES.items()}


class CheckpointError(RuntimeError):
    pass


class ConfigHashWarning(UserWarning):
    pass


def save_checkpoint(path, tensors: dict[str, torch.Tensor], config_hash: str, provenance: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table, blobs, offset = [], [], 0
    for name, t in tensors.items():
        t = t.detach().cpu().contiguous()
        if t.dtype not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {t.dtype} for {name!r}")
        raw = t.numpy().astype(_DTYPES[t.dtype], copy=False).tobytes(order="C")
        table.append({"name": name, "dtype": _DTYPES[t.dtype], "shape": list(t.shape), "offset": offset,
                      "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"format_version": FORMAT_VERSION, "config_hash": config_hash,
                         "provenance": provenance or {}, "tensors": table}, sort_keys=True).encode()
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for raw in blobs:
            f.write(raw)
    return path


def load_checkpoint(path, expected_hash: str | None = None) -> tuple[dict[str, torch.Tensor], dict]:
    """Return ``(tensors, header)``; warns with ``ConfigHashWarning`` if the hash differs."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file")
    (hlen,) = struct.unpack_from("<Q", data, len(MAGIC))
    start = len(MAGIC) + 8
    header = json.loads(data[start : start + hlen].decode())
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {header.get('format_version')}")
    body = memoryview(data)[start + hlen :]
    tensors = {}
    for e in header["tensors"]:
        if e["offset"] + e["nbytes"] > len(body):
            raise CheckpointError(f"truncated checkpoint: tensor {e['name']!r} runs past the end of file")
        arr = np.frombuffer(body[e["offset"] : e["offset"] + e["nbytes"]], dtype=np.dtype(e["dtype"]))
        tensors[e["name"]] = torch.from_numpy(arr.reshape(e["shape"]).copy())
    if expected_hash is not None and header["config_hash"] != expected_hash:
        warnings.warn(f"checkpoint {path.name} was written for config {header['config_hash']}, "
                      f"loading under {expected_hash}", ConfigHashWarning, stacklevel=2)
    return tensors, header


def save_model(path, model: torch.nn.Module, config_hash: str, extra: dict | None = None) -> Path:
    prov = {"trained_phases": list(getattr(model, "trained_phases", [])), **(extra or {})}
    return save_checkpoint(path, model.state_dict(), config_hash, prov)


def load_model(path, model: torch.nn.Module, expected_hash: str | None = None) -> dict:
    tensors, header = load_checkpoint(path, expected_hash)
    model.load_state_dict(tensors)
    model.trained_phases = list(header["provenance"].get("trained_phases", []))
    return header
