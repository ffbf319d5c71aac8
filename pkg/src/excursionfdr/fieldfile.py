"""Binary on-disk format for scalar fields and sample stacks.

Layout, all little-endian:

    magic    8 bytes  "EXCRFLD\\0"
    version  u32      currently 1
    D        u32      lattice rank, 1 to 3
    dims     u32 * D  extents
    count    u64      1 for a single field, n for a stack
    payload  f32 * count * m   row-major values
    mask     optional: flag u8 (1), then m bytes of 0/1

A file with count 1 reads back as a ScalarField, anything larger as a
SampleStack.  Each corruption mode raises its own error type so callers
can tell a wrong file apart from a damaged one.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .lattice import LatticeShape, Mask, SampleStack, ScalarField

__all__ = [
    "FieldFileError",
    "BadMagicError",
    "VersionMismatchError",
    "TruncatedPayloadError",
    "DimensionError",
    "MaskBlockError",
    "read_field_file",
    "write_field_file",
]

MAGIC = b"EXCRFLD\x00"
VERSION = 1

# geometry sanity bounds; files beyond these are corrupt, not big
_MAX_EXTENT = 2**20
_MAX_LOCATIONS = 2**28
_MAX_COUNT = 2**24


class FieldFileError(Exception):
    """Base error for field-file I/O; `code` is a stable machine-readable tag."""

    code = "field-file"


class BadMagicError(FieldFileError):
    code = "bad-magic"


class VersionMismatchError(FieldFileError):
    code = "version-mismatch"


class TruncatedPayloadError(FieldFileError):
    code = "truncated"


class DimensionError(FieldFileError):
    code = "dim-overflow"


class MaskBlockError(FieldFileError):
    code = "bad-mask-block"


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, nbytes: int) -> bytes:
        end = self.offset + nbytes
        if end > len(self.data):
            raise TruncatedPayloadError(
                f"file ends after {len(self.data)} bytes, needed {end}"
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset


def write_field_file(path, data: ScalarField | SampleStack) -> None:
    """Serialize a field or stack; float64 values are stored as float32."""
    if isinstance(data, ScalarField):
        values = data.values[np.newaxis]
    elif isinstance(data, SampleStack):
        values = data.samples
    else:
        raise TypeError(f"expected ScalarField or SampleStack, got {type(data).__name__}")
    dims = data.shape.dims
    count = values.shape[0]

    parts = [
        MAGIC,
        struct.pack("<I", VERSION),
        struct.pack("<I", len(dims)),
        struct.pack(f"<{len(dims)}I", *dims),
        struct.pack("<Q", count),
        np.ascontiguousarray(values, dtype="<f4").tobytes(),
    ]
    if data.mask is not None:
        parts.append(b"\x01")
        parts.append(np.ascontiguousarray(data.mask.inside, dtype=np.uint8).tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_field_file(path) -> ScalarField | SampleStack:
    """Read a field file; see the module docstring for the layout."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a field file (magic mismatch)")
    reader = _Reader(raw)
    reader.take(len(MAGIC))

    (version,) = reader.unpack("I")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {VERSION}")

    (rank,) = reader.unpack("I")
    if not 1 <= rank <= 3:
        raise DimensionError(f"{path}: lattice rank {rank} outside 1..3")
    dims = reader.unpack(f"{rank}I")
    if any(d < 1 or d > _MAX_EXTENT for d in dims):
        raise DimensionError(f"{path}: unreasonable extents {dims}")
    m = 1
    for d in dims:
        m *= d
    if m > _MAX_LOCATIONS:
        raise DimensionError(f"{path}: {m} locations exceeds the supported maximum")

    (count,) = reader.unpack("Q")
    if count < 1 or count > _MAX_COUNT:
        raise DimensionError(f"{path}: sample count {count} outside 1..{_MAX_COUNT}")

    payload = reader.take(count * m * 4)
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    values = values.reshape((count,) + dims)

    mask = None
    if reader.remaining:
        (flag,) = reader.unpack("B")
        if flag not in (0, 1):
            raise MaskBlockError(f"{path}: mask flag byte {flag} must be 0 or 1")
        if flag == 1:
            mask_bytes = np.frombuffer(reader.take(m), dtype=np.uint8)
            if ((mask_bytes != 0) & (mask_bytes != 1)).any():
                raise MaskBlockError(f"{path}: mask bytes must be 0 or 1")
            mask = Mask(LatticeShape(dims), mask_bytes.reshape(dims).astype(bool))
        if reader.remaining:
            raise MaskBlockError(f"{path}: {reader.remaining} unexpected trailing bytes")

    shape = LatticeShape(dims)
    if count == 1:
        return ScalarField(shape, values[0], mask)
    return SampleStack(shape, values, mask)
