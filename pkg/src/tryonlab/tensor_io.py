"""Bit-exact binary tensor serialization.

One tensor per file (or per stream segment): magic ``WDT1``, u8 dtype code,
u8 ndim, ndim little-endian u32 dims, then the raw C-order buffer. Used for
dataset samples and checkpoint parameter blobs.
"""

import struct
from typing import BinaryIO

import numpy as np

from .errors import DataIOError

MAGIC = b"WDT1"

_DTYPE_CODES = {
    np.dtype(np.float32): 0,
    np.dtype(np.float64): 1,
    np.dtype(np.uint8): 2,
    np.dtype(np.int32): 3,
    np.dtype(np.int64): 4,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def write_tensor_stream(f: BinaryIO, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    if arr.dtype not in _DTYPE_CODES:
        raise DataIOError(f"unsupported dtype {arr.dtype}")
    if arr.ndim > 255:
        raise DataIOError(f"too many dimensions ({arr.ndim})")
    f.write(MAGIC)
    f.write(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
    for d in arr.shape:
        f.write(struct.pack("<I", d))
    f.write(arr.tobytes())


def read_tensor_stream(f: BinaryIO) -> np.ndarray:
    magic = f.read(4)
    if magic != MAGIC:
        raise DataIOError(f"bad tensor magic {magic!r}, expected {MAGIC!r}")
    head = f.read(2)
    if len(head) != 2:
        raise DataIOError("truncated tensor header")
    code, ndim = struct.unpack("<BB", head)
    if code not in _CODE_DTYPES:
        raise DataIOError(f"unknown dtype code {code}")
    dims = []
    for _ in range(ndim):
        raw = f.read(4)
        if len(raw) != 4:
            raise DataIOError("truncated tensor dims")
        dims.append(struct.unpack("<I", raw)[0])
    dtype = _CODE_DTYPES[code]
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    buf = f.read(count * dtype.itemsize)
    if len(buf) != count * dtype.itemsize:
        raise DataIOError("truncated tensor payload")
    return np.frombuffer(buf, dtype=dtype).reshape(dims).copy()


def write_tensor(path, arr: np.ndarray) -> None:
    with open(path, "wb") as f:
        write_tensor_stream(f, arr)


def read_tensor(path) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            return read_tensor_stream(f)
    except FileNotFoundError as e:
        raise DataIOError(f"missing tensor file {path}") from e
