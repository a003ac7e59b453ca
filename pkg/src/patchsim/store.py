"""Binary index files: normalized feature matrices plus grid geometry.

Layout, all little-endian:

    offset 0   magic      4 bytes  b"SIMP"
    offset 4   version    u32      currently 1
    offset 8   height     u32      image rows
    offset 12  width      u32      image columns
    offset 16  patch_size u32
    offset 20  n_patches  u64
    offset 28  n_features u32
    offset 32  col_min    n_features float64 (pre-normalization minima)
    ...        col_max    n_features float64 (pre-normalization maxima)
    ...        payload    n_patches * n_features float64, row-major

Writes go through a sibling temp file and an atomic rename, so readers
never observe a half-written index.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .errors import IndexFormatError, InvalidParamsError
from .features import N_FEATURES, FeatureMatrix
from .image import GridMeta

MAGIC = b"SIMP"
VERSION = 1

_HEADER = struct.Struct("<4sIIIIQI")
HEADER_SIZE = _HEADER.size


def save_index(path, matrix: FeatureMatrix) -> None:
    """Write a normalized matrix; refuses raw (unnormalized) input."""
    if not matrix.normalized:
        raise InvalidParamsError("only normalized matrices can be saved")
    if matrix.col_min is None or matrix.col_max is None:
        raise InvalidParamsError("matrix is missing its stored column ranges")
    grid = matrix.grid
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        grid.height,
        grid.width,
        grid.patch_size,
        matrix.n_patches,
        N_FEATURES,
    )
    payload = np.ascontiguousarray(matrix.values, dtype="<f8")
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp_path = tempfile.mkstemp(prefix=".index-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(matrix.col_min.astype("<f8").tobytes())
            fh.write(matrix.col_max.astype("<f8").tobytes())
            fh.write(payload.tobytes())
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def load_index(path) -> FeatureMatrix:
    """Read an index back; every stored byte count is validated up front."""
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < HEADER_SIZE:
            raise IndexFormatError(
                f"file too short for header: expected {HEADER_SIZE} bytes, "
                f"got {len(head)}"
            )
        magic, version, height, width, patch_size, n_patches, n_features = (
            _HEADER.unpack(head)
        )
        if magic != MAGIC:
            raise IndexFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise IndexFormatError(f"unsupported version {version}, expected {VERSION}")
        if n_features != N_FEATURES:
            raise IndexFormatError(
                f"index stores {n_features} features per patch, expected {N_FEATURES}"
            )
        try:
            grid = GridMeta(height, width, patch_size)
        except Exception as exc:
            raise IndexFormatError(f"inconsistent geometry in header: {exc}") from exc
        if n_patches != grid.n_patches:
            raise IndexFormatError(
                f"header claims {n_patches} patches but a {height}x{width} image "
                f"with patch size {patch_size} has {grid.n_patches}"
            )
        range_bytes = 2 * n_features * 8
        ranges = fh.read(range_bytes)
        if len(ranges) < range_bytes:
            raise IndexFormatError(
                f"truncated column ranges: expected {range_bytes} bytes, "
                f"got {len(ranges)}"
            )
        col_min = np.frombuffer(ranges[: n_features * 8], dtype="<f8")
        col_max = np.frombuffer(ranges[n_features * 8 :], dtype="<f8")
        payload_bytes = n_patches * n_features * 8
        payload = fh.read(payload_bytes)
        if len(payload) < payload_bytes:
            raise IndexFormatError(
                f"truncated payload: expected {payload_bytes} bytes, "
                f"got {len(payload)}"
            )
        # Trailing bytes beyond the declared payload are ignored.
    values = np.frombuffer(payload, dtype="<f8").reshape(n_patches, n_features).copy()
    return FeatureMatrix(
        values, grid, normalized=True, col_min=col_min.copy(), col_max=col_max.copy()
    )


__all__ = ["save_index", "load_index", "MAGIC", "VERSION", "HEADER_SIZE"]
