"""Binary tensor container.

Layout: magic ``b"RMX1"``, then for each tensor in order: u32 name length,
UTF-8 name, u32 rank, ``rank`` u32 extents, little-endian float32 payload.
All integers are little-endian. The file ends after the last tensor.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"RMX1"


class FormatError(ValueError):
    """File contents do not follow the expected binary layout."""


def encode_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    parts = [MAGIC]
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


def decode_tensors(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise FormatError("missing RMX1 magic bytes")
    out = {}
    pos = 4
    try:
        while pos < len(data):
            (name_len,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + name_len].decode("utf-8")
            if len(name.encode("utf-8")) != name_len:
                raise FormatError("truncated tensor name")
            pos += name_len
            (rank,) = struct.unpack_from("<I", data, pos)
            pos += 4
            shape = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            nbytes = 4 * int(np.prod(shape, dtype=np.int64))
            if pos + nbytes > len(data):
                raise FormatError(f"truncated payload for tensor {name!r}")
            arr = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=pos)
            out[name] = arr.reshape(shape).astype(np.float32)
            pos += nbytes
    except struct.error as exc:
        raise FormatError(f"truncated tensor header at byte {pos}") from exc
    except UnicodeDecodeError as exc:
        raise FormatError("tensor name is not valid UTF-8") from exc
    return out


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode_tensors(tensors))


def load_tensors(path) -> dict[str, np.ndarray]:
    return decode_tensors(Path(path).read_bytes())
