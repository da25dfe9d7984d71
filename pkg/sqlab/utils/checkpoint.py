"""
Self-describing binary checkpoints.

Layout (all integers little-endian):

    magic         8 bytes  b"SQLABCK\\x00"
    version       uint32
    total_length  uint64   length of the whole file, CRC included
    config_hash   32 bytes SHA-256 of the config JSON
    config_length uint32
    config        UTF-8 JSON
    step          uint64
    block_count   uint32
    blocks        name_length uint16, name (UTF-8), rank uint8, dims uint32 x rank,
                  float64 payload
    crc32         uint32   over every preceding byte

The CRC is verified before any block is parsed, so a corrupt file never yields
a partially loaded model.
"""

from __future__ import annotations

import hashlib
import logging
import struct
import zlib
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from sqlab.exceptions import (
    CheckpointFormatError,
    CheckpointVersionError,
    ChecksumError,
    DimensionError,
    TruncatedCheckpointError,
)
from sqlab.networks.model import GanModel


logger = logging.getLogger(__name__)

MAGIC = b"SQLABCK\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")
_CRC = struct.Struct("<I")


@dataclass
class Checkpoint:
    """Decoded checkpoint contents."""

    arrays: dict[str, np.ndarray]
    config_json: str
    config_hash: str
    step: int

    def restore(self, model: GanModel) -> GanModel:
        """
        Copy the stored parameters into ``model``.

        Raises:
            DimensionError: If a stored shape differs from the model's (both are named)
        """
        params = model.parameters()
        state = {name: self.arrays[name] for name in params if name in self.arrays}
        model.load_state_arrays(state)
        return model

    def extra_arrays(self, prefix: str) -> dict[str, np.ndarray]:
        """Stored arrays whose names start with ``prefix``."""
        return {k: v for k, v in self.arrays.items() if k.startswith(prefix)}


def _encode_block(name: str, array: np.ndarray) -> bytes:
    encoded = name.encode("utf-8")
    array = np.ascontiguousarray(array, dtype="<f8")
    header = struct.pack("<H", len(encoded)) + encoded + struct.pack("<B", array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    return header + array.tobytes()


def save_checkpoint(
    state: GanModel | Mapping[str, np.ndarray],
    path: str | Path,
    config_json: str = "{}",
    step: int = 0,
    extra: Mapping[str, np.ndarray] | None = None,
) -> Path:
    """
    Write parameters to a checkpoint file.

    Args:
        state: Model (all its parameters are saved) or named arrays
        path: Output path
        config_json: Run configuration as JSON
        step: Training step the state belongs to
        extra: Additional named arrays (e.g. embedder weights)

    Returns:
        The written path
    """
    arrays = state.state_arrays() if isinstance(state, GanModel) else dict(state)
    if extra:
        arrays.update(extra)
    config_bytes = config_json.encode("utf-8")
    body = bytearray()
    body += hashlib.sha256(config_bytes).digest()
    body += struct.pack("<I", len(config_bytes)) + config_bytes
    body += struct.pack("<QI", step, len(arrays))
    for name in sorted(arrays):
        body += _encode_block(name, arrays[name])

    total = _PREFIX.size + len(body) + _CRC.size
    payload = _PREFIX.pack(MAGIC, FORMAT_VERSION, total) + bytes(body)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload + _CRC.pack(zlib.crc32(payload)))
    logger.info(f"Checkpoint written to {path} (step {step}, {len(arrays)} arrays)")
    return path


class _Reader:
    def __init__(self, data: bytes, offset: int) -> None:
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CheckpointFormatError(f"block overruns the file at offset {self.offset}")
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    Validate and decode checkpoint bytes.

    Raises:
        CheckpointFormatError: Bad magic, trailing bytes or malformed blocks
        CheckpointVersionError: Unsupported format version
        TruncatedCheckpointError: File shorter than its declared length
        ChecksumError: CRC32 mismatch
    """
    if len(data) < _PREFIX.size:
        if not MAGIC.startswith(data[: len(MAGIC)]):
            raise CheckpointFormatError("not a checkpoint (bad magic)")
        raise TruncatedCheckpointError(f"file has only {len(data)} bytes")
    magic, version, total = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointFormatError("not a checkpoint (bad magic)")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})"
        )
    if len(data) < total:
        raise TruncatedCheckpointError(f"file has {len(data)} bytes, header declares {total}")
    if len(data) > total:
        raise CheckpointFormatError(f"file has {len(data) - total} bytes past its declared end")
    (stored_crc,) = _CRC.unpack_from(data, total - _CRC.size)
    if zlib.crc32(data[: total - _CRC.size]) != stored_crc:
        raise ChecksumError("checkpoint CRC32 mismatch")

    reader = _Reader(data[: total - _CRC.size], _PREFIX.size)
    config_hash = reader.take(32)
    (config_length,) = reader.unpack("<I")
    config_bytes = reader.take(config_length)
    if hashlib.sha256(config_bytes).digest() != config_hash:
        raise ChecksumError("config hash does not match the stored config")
    step, count = reader.unpack("<QI")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        name = reader.take(name_length).decode("utf-8")
        (rank,) = reader.unpack("<B")
        dims = reader.unpack(f"<{rank}I")
        size = int(np.prod(dims, dtype=np.int64))
        arrays[name] = np.frombuffer(reader.take(8 * size), dtype="<f8").reshape(dims).copy()
    if reader.offset != len(reader.data):
        raise CheckpointFormatError("unexpected bytes after the last block")
    return Checkpoint(arrays, config_bytes.decode("utf-8"), config_hash.hex(), step)


def load_checkpoint(path: str | Path, model: GanModel | None = None) -> Checkpoint:
    """
    Read a checkpoint, optionally restoring it into a model.

    Args:
        path: Checkpoint path
        model: Model whose parameters are overwritten (shapes must match)

    Returns:
        Decoded checkpoint
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    checkpoint = decode_checkpoint(path.read_bytes())
    if model is not None:
        missing = set(model.parameters()) - set(checkpoint.arrays)
        if missing:
            raise DimensionError(f"checkpoint lacks parameters: {sorted(missing)}")
        checkpoint.restore(model)
    return checkpoint
