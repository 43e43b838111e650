"""Binary container for value fields.

Layout (all multi-byte fields little-endian):

    offset  size  field
    0       8     magic ``HJVF0001``
    8       1     element type: 0 = float64, 1 = Q5.27 raw int32
    9       16    dims, four uint32
    25      32    mins, four float64
    57      32    spacings, four float64
    89      -     payload, row-major dims product elements
    end-4   4     CRC32 of the payload, uint32

Periodicity is not stored; on load an axis is marked periodic when its span
N*dx sits within 1% of a full turn, which uniquely recovers the angle axis
of any sanely configured grid.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .grid import (ELEM_FLOAT64, ELEM_Q5_27, GridConfig, TWO_PI, ValueField)

MAGIC = b"HJVF0001"
_TYPE_CODES = {ELEM_FLOAT64: 0, ELEM_Q5_27: 1}
_TYPE_KINDS = {0: ELEM_FLOAT64, 1: ELEM_Q5_27}
_PAYLOAD_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i4")}
_HEADER = struct.Struct("<8sB4I4d4d")


class ValueFileError(ValueError):
    """Malformed, truncated, or corrupt value file."""


def write_valuefile(field: ValueField, path: str | Path) -> None:
    grid = field.grid
    header = _HEADER.pack(MAGIC, _TYPE_CODES[field.kind],
                          *grid.dims, *grid.mins, *grid.spacings)
    payload = np.ascontiguousarray(field.data).astype(
        _PAYLOAD_DTYPES[_TYPE_CODES[field.kind]], copy=False).tobytes()
    trailer = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    Path(path).write_bytes(header + payload + trailer)


def _infer_periodic(dims, spacings) -> tuple[bool, bool, bool, bool]:
    flags = []
    for n, dx in zip(dims, spacings):
        span = n * dx
        flags.append(abs(span - TWO_PI) <= 0.01 * TWO_PI)
    return tuple(flags)


def read_valuefile(path: str | Path) -> ValueField:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size + 4:
        raise ValueFileError(f"{path}: truncated file")
    magic, code, *rest = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise ValueFileError(f"{path}: bad magic {magic!r}")
    if code not in _TYPE_KINDS:
        raise ValueFileError(f"{path}: unknown element type code {code}")
    dims = tuple(rest[0:4])
    mins = tuple(rest[4:8])
    spacings = tuple(rest[8:12])
    dtype = _PAYLOAD_DTYPES[code]
    count = int(np.prod(dims))
    expect = _HEADER.size + count * dtype.itemsize + 4
    if len(blob) != expect:
        raise ValueFileError(
            f"{path}: size {len(blob)} does not match header ({expect} expected)")
    payload = blob[_HEADER.size:-4]
    (crc_stored,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise ValueFileError(f"{path}: payload CRC mismatch")
    grid = GridConfig(dims, mins, spacings, _infer_periodic(dims, spacings))
    data = np.frombuffer(payload, dtype=dtype).reshape(dims)
    if code == 0:
        data = data.astype(np.float64, copy=True)
    else:
        data = data.astype(np.int32, copy=True)
    return ValueField(grid, data, _TYPE_KINDS[code])
