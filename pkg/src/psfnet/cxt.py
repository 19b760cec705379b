"""CXT tensor files and PGM previews.

CXT layout: magic "CXT1", u8 dtype tag (0 = f32 complex interleaved,
1 = f32 real, 2 = u8 binary), u8 ndim, ndim little-endian u64 extents,
then the row-major little-endian payload.  Payloads are 32-bit on disk;
reads upcast to the package's internal 64-bit types.
"""

import struct

import numpy as np

from .errors import CxtError

__all__ = ["write_cxt", "read_cxt", "write_pgm"]

MAGIC = b"CXT1"
TAG_COMPLEX = 0
TAG_REAL = 1
TAG_BINARY = 2

_WRITE_DTYPES = {TAG_COMPLEX: "<c8", TAG_REAL: "<f4", TAG_BINARY: "u1"}
_ITEM_SIZE = {TAG_COMPLEX: 8, TAG_REAL: 4, TAG_BINARY: 1}


def _tag_for(arr: np.ndarray) -> int:
    if np.iscomplexobj(arr):
        return TAG_COMPLEX
    if arr.dtype in (np.uint8, np.bool_):
        return TAG_BINARY
    if np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.integer):
        return TAG_REAL
    raise CxtError(f"unsupported dtype {arr.dtype}")


def write_cxt(path, arr) -> None:
    arr = np.asarray(arr)
    tag = _tag_for(arr)
    header = struct.pack("<4sBB", MAGIC, tag, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr).astype(_WRITE_DTYPES[tag]).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + payload)


def read_cxt(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 6:
        raise CxtError(f"{path}: truncated header")
    magic, tag, ndim = struct.unpack_from("<4sBB", data, 0)
    if magic != MAGIC:
        raise CxtError(f"{path}: bad magic {magic!r}")
    if tag not in _ITEM_SIZE:
        raise CxtError(f"{path}: unknown dtype tag {tag}")
    offset = 6 + 8 * ndim
    if len(data) < offset:
        raise CxtError(f"{path}: truncated extents")
    shape = struct.unpack_from(f"<{ndim}Q", data, 6)
    count = int(np.prod(shape)) if ndim else 1
    expected = offset + count * _ITEM_SIZE[tag]
    if len(data) != expected:
        raise CxtError(
            f"{path}: payload length {len(data) - offset} does not match "
            f"extents (expected {expected - offset})"
        )
    raw = np.frombuffer(data, dtype=_WRITE_DTYPES[tag], offset=offset, count=count)
    raw = raw.reshape(shape)
    if tag == TAG_COMPLEX:
        return raw.astype(np.complex128)
    if tag == TAG_REAL:
        return raw.astype(np.float64)
    return raw.copy()


def write_pgm(path, mag) -> None:
    """8-bit max-normalized binary PGM preview of a magnitude image."""
    mag = np.abs(np.asarray(mag, dtype=np.float64))
    peak = mag.max()
    img = np.zeros_like(mag) if peak == 0 else mag / peak
    pix = np.round(255.0 * img).astype(np.uint8)
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(pix.tobytes())
