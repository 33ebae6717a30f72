# -*- coding: utf-8 -*-
""" Checkpoint Container Module.

Layout (all integers unsigned little-endian):

    b"CICK" | u32 version | u64 n + n bytes UTF-8 config echo
            | u64 n + n bytes msgpack metadata
            | u64 record count | records ... | u64 checksum

Each record is `u64 name length | name bytes | u64 rank | u64 dims ... | float64 LE payload`.
The checksum is an 8-byte BLAKE2b digest of every preceding byte.

NOTE: The metadata map is encoded with msgpack, like driver transactions used to be,
because it is small, typed and stable byte-for-byte for identical inputs.
    https://github.com/msgpack/msgpack-python
"""

import hashlib
import struct

import msgpack
import numpy as np

from cicstone.core.errors import ContractError, CorruptionError

__all__ = ["MAGIC", "FORMAT_VERSION", "METADATA_FIELDS", "PHASES", "Checkpoint", "save_checkpoint", "load_checkpoint",
           "checksum"]

MAGIC = b"CICK"
FORMAT_VERSION = 1
PHASES = ("pretrain", "finetune", "replay")

# Field name -> accepted type. Absent fields are stored as None.
METADATA_FIELDS = {
    "agent": str,
    "env": str,
    "task": str,
    "phase": str,
    "step": int,
    "skill": list,
    "init_scheme": str,
    "version": str,
}


def checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


class Checkpoint:
    """ Checkpoint class.

    Example:
        checkpoint = Checkpoint(config.render(), metadata, agent.arrays())
        save_checkpoint("run/checkpoint.cick", checkpoint)
        ...
        restored = load_checkpoint("run/checkpoint.cick")
    """

    def __init__(self, config_text: str, metadata: dict, arrays: dict):
        # Left out metadata fields are set to None
        self.metadata = dict.fromkeys(METADATA_FIELDS)
        self.metadata.update(metadata)
        problem = self.metadata_problem(self.metadata)
        if problem is not None:
            raise ContractError("Checkpoint metadata: {}".format(problem))
        self.config_text = config_text
        self.arrays = {name: np.asarray(array, dtype=np.float64) for name, array in arrays.items()}

    @staticmethod
    def metadata_problem(metadata: dict):
        """ Returns a description of the first bad metadata field, or None when all fields are acceptable. """
        unknown = sorted(set(metadata) - set(METADATA_FIELDS))
        if unknown:
            return "unknown field(s) {}".format(unknown)
        for field, expected in METADATA_FIELDS.items():
            value = metadata.get(field)
            if value is None:
                continue
            # bool is an int subclass but never a step
            if not isinstance(value, expected) or isinstance(value, bool):
                return "'{}' should be {}, got {!r}".format(field, expected.__name__, value)
        if metadata.get("phase") not in (None, *PHASES):
            return "'phase' should be one of {}, got {!r}".format(list(PHASES), metadata["phase"])
        if metadata.get("step") is not None and metadata["step"] < 0:
            return "'step' should be non-negative, got {}".format(metadata["step"])
        skill = metadata.get("skill")
        if skill is not None and not all(isinstance(value, float) for value in skill):
            return "'skill' should hold floats, got {!r}".format(skill)
        return None

    def encoded(self) -> bytes:
        # 1. header, config echo and metadata
        config_bytes = self.config_text.encode("utf-8")
        metadata_bytes = msgpack.packb(self.metadata, use_bin_type=True)
        parts = [MAGIC, struct.pack("<I", FORMAT_VERSION),
                 struct.pack("<Q", len(config_bytes)), config_bytes,
                 struct.pack("<Q", len(metadata_bytes)), metadata_bytes,
                 struct.pack("<Q", len(self.arrays))]
        # 2. named array records
        for name, array in self.arrays.items():
            name_bytes = name.encode("utf-8")
            parts.append(struct.pack("<Q", len(name_bytes)))
            parts.append(name_bytes)
            parts.append(struct.pack("<Q", array.ndim))
            parts.append(struct.pack("<{}Q".format(array.ndim), *array.shape))
            parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
        # 3. trailing checksum over everything before it
        body = b"".join(parts)
        return body + checksum(body)

    @staticmethod
    def decode(received: bytes):
        return decode_checkpoint(received)


class _Reader:

    def __init__(self, payload: bytes):
        self._payload = payload
        self._offset = 0

    def take(self, size: int) -> bytes:
        if self._offset + size > len(self._payload):
            raise CorruptionError("Checkpoint is truncated")
        chunk = self._payload[self._offset:self._offset + size]
        self._offset += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._payload)


def decode_checkpoint(received: bytes) -> Checkpoint:
    # 1. check the integrity of the message
    if len(received) < len(MAGIC) + 12 or received[:len(MAGIC)] != MAGIC:
        raise CorruptionError("Not a checkpoint: bad magic bytes")
    body, digest = received[:-8], received[-8:]
    if checksum(body) != digest:
        raise CorruptionError("Checkpoint checksum mismatch")
    reader = _Reader(body)
    reader.take(len(MAGIC))
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise CorruptionError("Unsupported checkpoint format version {} (expected {})".format(
            version, FORMAT_VERSION))
    # 2. decode the sections
    config_text = reader.take(reader.u64()).decode("utf-8")
    metadata = msgpack.unpackb(reader.take(reader.u64()), raw=False)
    if not isinstance(metadata, dict) or metadata.keys() != METADATA_FIELDS.keys():
        raise CorruptionError("Checkpoint metadata does not carry the expected fields")
    problem = Checkpoint.metadata_problem(metadata)
    if problem is not None:
        raise CorruptionError("Checkpoint metadata: {}".format(problem))
    arrays = {}
    for _ in range(reader.u64()):
        name = reader.take(reader.u64()).decode("utf-8")
        rank = reader.u64()
        shape = struct.unpack("<{}Q".format(rank), reader.take(8 * rank))
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        arrays[name] = np.frombuffer(reader.take(8 * count), dtype="<f8").reshape(shape).astype(np.float64)
    if not reader.exhausted:
        raise CorruptionError("Checkpoint has trailing bytes after its records")
    return Checkpoint(config_text, metadata, arrays)


def save_checkpoint(path: str, checkpoint: Checkpoint) -> bytes:
    encoded = checkpoint.encoded()
    with open(path, "wb") as fh:
        fh.write(encoded)
    return encoded


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
