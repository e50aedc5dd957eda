"""Reader and writer for the BTSR tensor interchange format.

A BTSR file is a single dense tensor:

    magic   4 bytes  0x42 0x54 0x53 0x52 ("BTSR")
    version u32 LE   must be 1
    dtype   u8       1 = float32, 2 = float64
    ndim    u8
    dims    ndim x u64 LE
    payload row-major IEEE-754 little-endian values

The payload length must match the dims exactly; trailing bytes are an error.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"BTSR"
VERSION = 1

_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODE_FOR = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


class BtsrError(ValueError):
    """Malformed file, unsupported version, or unsupported dtype."""


def write_btsr(path, array) -> None:
    arr = np.asarray(array)
    code = _CODE_FOR.get(arr.dtype)
    if code is None:
        raise BtsrError(f"btsr supports float32/float64 payloads, got {arr.dtype}")
    if arr.ndim > 255:
        raise BtsrError(f"btsr ndim limit is 255, got {arr.ndim}")
    header = MAGIC + struct.pack("<IBB", VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes())


def read_btsr(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 10:
        raise BtsrError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise BtsrError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, code, ndim = struct.unpack("<IBB", raw[4:10])
    if version != VERSION:
        raise BtsrError(f"{path}: unsupported version {version}")
    dtype = _DTYPE_CODES.get(code)
    if dtype is None:
        raise BtsrError(f"{path}: unknown dtype code {code}")
    dims_end = 10 + 8 * ndim
    if len(raw) < dims_end:
        raise BtsrError(f"{path}: truncated dims")
    dims = struct.unpack(f"<{ndim}Q", raw[10:dims_end])
    count = 1
    for d in dims:
        count *= d
    expected = dims_end + count * dtype.itemsize
    if len(raw) != expected:
        raise BtsrError(
            f"{path}: payload is {len(raw) - dims_end} bytes, "
            f"dims {dims} require {count * dtype.itemsize}"
        )
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=dims_end)
    return data.reshape(dims).astype(dtype.newbyteorder("="))
