"""
Binary checkpoints.

Layout (little-endian):

    magic    8 bytes  b"ADVPOSE1"
    version  u32
    count    u32      number of records
    records  count × (name_len u32, name utf-8, rank u32, dims u32 × rank,
                      float64 × prod(dims))

Metadata (variant, mode, iteration, ...) travels as zero-length records named
"meta:<key>:<value>".
"""

import logging
import os
import struct

import numpy as np

from advpose.errors import BadMagicError, VersionMismatchError

logger = logging.getLogger(__name__)

MAGIC = b"ADVPOSE1"
VERSION = 1
META_PREFIX = "meta:"


class Checkpoint:
    """
    Loaded checkpoint contents.

    Attributes:
        records: Dict name -> float64 array, in file order
        meta: Dict key -> string value
    """

    def __init__(self, records=None, meta=None):
        self.records = dict(records or {})
        self.meta = dict(meta or {})

    def section(self, prefix):
        """Records whose names start with `prefix`."""
        return {name: value for name, value in self.records.items() if name.startswith(prefix)}


def _meta_records(meta):
    records = {}
    for key in sorted(meta):
        key_text, value_text = str(key), str(meta[key])
        if ":" in key_text:
            raise ValueError(f"Metadata key '{key_text}' must not contain ':'")
        records[f"{META_PREFIX}{key_text}:{value_text}"] = np.zeros(0)
    return records


def write_checkpoint(path, records, meta=None):
    """
    Write named float64 arrays (and metadata) to `path`.

    Args:
        path: Output file path
        records: Dict name -> array
        meta: Dict key -> value (stringified)
    """
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    all_records = dict(_meta_records(meta or {}))
    all_records.update(records)

    chunks = [MAGIC, struct.pack("<II", VERSION, len(all_records))]
    for name, value in all_records.items():
        array = np.ascontiguousarray(value, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.tobytes())
    with open(path, "wb") as handle:
        handle.write(b"".join(chunks))
    logger.info("Wrote checkpoint %s (%d records)", path, len(all_records))


def read_checkpoint(path):
    """
    Read a checkpoint written by write_checkpoint.

    Raises:
        FileNotFoundError: If the file does not exist
        BadMagicError: If the magic is wrong or the file is truncated
        VersionMismatchError: If the format version is unsupported
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    with open(path, "rb") as handle:
        data = handle.read()

    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path} is not an advpose checkpoint")
    if len(data) < len(MAGIC) + 8:
        raise VersionMismatchError(f"{path}: header truncated before the version field")
    version, count = struct.unpack_from("<II", data, len(MAGIC))
    if version != VERSION:
        raise VersionMismatchError(f"{path}: checkpoint version {version}, expected {VERSION}")

    offset = len(MAGIC) + 8
    checkpoint = Checkpoint()

    def take(size):
        nonlocal offset
        if offset + size > len(data):
            raise BadMagicError(f"{path} is truncated")
        chunk = data[offset:offset + size]
        offset += size
        return chunk

    for _ in range(count):
        (name_length,) = struct.unpack("<I", take(4))
        name = take(name_length).decode("utf-8", errors="replace")
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(shape)) if rank else 1
        values = np.frombuffer(take(8 * size), dtype="<f8").astype(np.float64).reshape(shape)
        if name.startswith(META_PREFIX):
            key, _, value = name[len(META_PREFIX):].partition(":")
            checkpoint.meta[key] = value
        else:
            checkpoint.records[name] = values
    if offset != len(data):
        raise BadMagicError(f"{path} has trailing bytes after {count} records")
    return checkpoint


def save_checkpoint(path, models=(), optimizers=None, meta=None):
    """
    Save models and optimizer states.

    Args:
        path: Output file path
        models: Objects with state_dict() (parameter records keyed by name)
        optimizers: Dict prefix -> Adam
        meta: Dict of metadata
    """
    records = {}
    for model in models:
        records.update(model.state_dict())
    for prefix, optimizer in (optimizers or {}).items():
        records.update(optimizer.state_dict(prefix))
    write_checkpoint(path, records, meta)


def load_checkpoint(path):
    """Alias of read_checkpoint returning a Checkpoint."""
    return read_checkpoint(path)
