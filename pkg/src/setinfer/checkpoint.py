"""Flat checkpoint container.

Layout (documented here, tested for bit-exact 32-bit round trips):

    bytes 0..8    magic b"SINFCKPT"
    bytes 8..16   little-endian uint64, header length H
    bytes 16..16+H  UTF-8 JSON header
    rest          concatenated little-endian float32 payloads

Header fields: format_version (int), config (model config dict),
config_digest (sha256 hex of the canonical config JSON), extra
(free-form dict, e.g. train-state metadata), entries (list of
{name, shape, offset, nbytes} sorted by name; offsets are relative
to the start of the payload region).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError

MAGIC = b"SINFCKPT"
FORMAT_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


@dataclass
class Checkpoint:
    config: dict
    arrays: dict  # name -> float64 ndarray (upcast from stored float32)
    extra: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION
    digest: str = ""


def save_checkpoint(path, arrays: dict, config: dict, extra: dict | None = None):
    payloads = {}
    for name in sorted(arrays):
        a = np.asarray(arrays[name], dtype=np.float64)
        payloads[name] = a.astype("<f4")
    entries = []
    offset = 0
    for name in sorted(payloads):
        nbytes = payloads[name].nbytes
        entries.append(
            {
                "name": name,
                "shape": list(payloads[name].shape),
                "offset": offset,
                "nbytes": nbytes,
            }
        )
        offset += nbytes
    header = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "config_digest": config_digest(config),
        "extra": extra or {},
        "entries": entries,
    }
    header_bytes = canonical_json(header).encode("utf-8")
    # write-temp-then-rename so readers never see a partial file
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint64(len(header_bytes)).tobytes())
        fh.write(header_bytes)
        for name in sorted(payloads):
            fh.write(payloads[name].tobytes())
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    header_len = int(np.frombuffer(blob[8:16], dtype="<u8")[0])
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header ({e})") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {header.get('format_version')} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    expected = config_digest(header["config"])
    if header["config_digest"] != expected:
        raise CheckpointError(f"{path}: config digest mismatch (corrupt header)")
    payload = blob[16 + header_len :]
    arrays = {}
    for entry in header["entries"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        raw = payload[start : start + nbytes]
        if len(raw) != nbytes:
            raise CheckpointError(f"{path}: truncated payload for {entry['name']!r}")
        a = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"])
        arrays[entry["name"]] = a.astype(np.float64)
    return Checkpoint(
        config=header["config"],
        arrays=arrays,
        extra=header.get("extra", {}),
        format_version=header["format_version"],
        digest=header["config_digest"],
    )


def require_matching_config(ck: Checkpoint, config: dict, path=""):
    want = config_digest(config)
    if ck.digest != want:
        raise CheckpointError(
            f"{path or 'checkpoint'}: config digest {ck.digest[:12]}... does not "
            f"match current model config {want[:12]}..."
        )
