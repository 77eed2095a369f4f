"""FPK1 binary tensor files: named row-major f32 matrices.

Layout (all integers little-endian):
    magic "FPK1" | u32 row_count | u32 dim |
    row-id table: per row, u32 byte-length + UTF-8 id |
    payload: row_count*dim float32 LE, row-major.

Round trips are bit-exact for any finite float32 matrix.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FPK1"


class TensorFormatError(ValueError):
    pass


def write_tensor_file(path, row_ids: list[str], matrix: np.ndarray):
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise TensorFormatError(f"expected 2-D matrix, got shape {matrix.shape}")
    rows, dim = matrix.shape
    if len(row_ids) != rows:
        raise TensorFormatError(f"{len(row_ids)} row ids for {rows} rows")
    if not np.all(np.isfinite(matrix)):
        raise TensorFormatError("matrix contains non-finite values")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", rows, dim))
        for rid in row_ids:
            blob = rid.encode("utf-8")
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
        fh.write(matrix.astype("<f4", copy=False).tobytes(order="C"))


def read_tensor_file(path) -> tuple[list[str], np.ndarray]:
    """Read an FPK1 file, returning (row ids, rows x dim float32 matrix)."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise TensorFormatError(f"{path}: bad magic, not an FPK1 file")
    rows, dim = struct.unpack_from("<II", data, 4)
    offset = 12
    row_ids = []
    for _ in range(rows):
        if offset + 4 > len(data):
            raise TensorFormatError(f"{path}: truncated row-id table")
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise TensorFormatError(f"{path}: truncated row id")
        row_ids.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    expected = rows * dim * 4
    payload = data[offset:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"{path}: payload holds {len(payload)} bytes, "
            f"declared {rows}x{dim} needs {expected}"
        )
    matrix = np.frombuffer(payload, dtype="<f4").reshape(rows, dim).copy()
    if not np.all(np.isfinite(matrix)):
        raise TensorFormatError(f"{path}: matrix contains non-finite cells")
    return row_ids, matrix
