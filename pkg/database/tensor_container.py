"""Binary tensor container.

Layout (little-endian): magic ``OCTM`` | version u32 | dtype code u8 | ndim u8 |
ndim x u64 dims | row-major payload. Dtype codes: 1 = float32, 2 = float64.
"""

import logging
import math
import struct
from pathlib import Path

import numpy as np

from modules.errors import ContainerFormatError

logger = logging.getLogger(__name__)

MAGIC = b'OCTM'
VERSION = 1
DTYPE_CODES = {1: np.dtype('<f4'), 2: np.dtype('<f8')}
CODE_FOR_DTYPE = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}
HEADER = struct.Struct('<4sIBB')


def encode_tensor(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    code = CODE_FOR_DTYPE.get(np.dtype(f'f{array.dtype.itemsize}')) if array.dtype.kind == 'f' else None
    if code is None:
        raise ContainerFormatError(f"Unsupported dtype {array.dtype}; only float32 and float64 are stored")
    if array.ndim > 255:
        raise ContainerFormatError(f"Too many dimensions: {array.ndim}")
    header = HEADER.pack(MAGIC, VERSION, code, array.ndim)
    dims = struct.pack(f'<{array.ndim}Q', *array.shape)
    payload = np.ascontiguousarray(array, dtype=DTYPE_CODES[code]).tobytes(order='C')
    return header + dims + payload


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < HEADER.size:
        raise ContainerFormatError(f"Truncated header: {len(data)} bytes")
    magic, version, code, ndim = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ContainerFormatError(f"Bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ContainerFormatError(f"Unsupported container version {version}")
    if code not in DTYPE_CODES:
        raise ContainerFormatError(f"Unknown dtype code {code}")
    offset = HEADER.size
    dims_size = 8 * ndim
    if len(data) < offset + dims_size:
        raise ContainerFormatError("Truncated dimension table")
    shape = struct.unpack_from(f'<{ndim}Q', data, offset)
    offset += dims_size
    dtype = DTYPE_CODES[code]
    expected = math.prod(shape) * dtype.itemsize
    remaining = len(data) - offset
    if remaining < expected:
        raise ContainerFormatError(f"Truncated payload: {remaining} bytes, expected {expected}")
    if remaining > expected:
        raise ContainerFormatError(f"{remaining - expected} trailing bytes after payload")
    array = np.frombuffer(data, dtype=dtype, offset=offset, count=expected // dtype.itemsize)
    return array.reshape(shape).astype(dtype.newbyteorder('='), copy=True)


def write_tensor(path, array: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(encode_tensor(array))
    logger.debug(f"Wrote tensor {np.shape(array)} to {path}")
    return path


def read_tensor(path) -> np.ndarray:
    with open(path, 'rb') as f:
        return decode_tensor(f.read())
