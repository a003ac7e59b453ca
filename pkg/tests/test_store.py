"""Index file round trips, byte layout, and corruption handling."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from patchsim import (
    FeatureMatrix,
    GridMeta,
    IndexFormatError,
    InvalidParamsError,
    load_index,
    normalize_minmax,
    save_index,
)
from patchsim.store import HEADER_SIZE, MAGIC, VERSION


def make_normalized(seed: int, height=12, width=9, patch_size=4) -> FeatureMatrix:
    rng = np.random.default_rng(seed)
    meta = GridMeta(height, width, patch_size)
    raw = FeatureMatrix(rng.random((meta.n_patches, 9)) * 40.0, meta)
    return normalize_minmax(raw)


class TestRoundTrip:
    def test_bitwise_equality(self, tmp_path):
        m = make_normalized(1)
        path = tmp_path / "t.idx"
        save_index(path, m)
        back = load_index(path)
        assert (back.values == m.values).all()
        assert back.values.dtype == np.float64
        assert (back.col_min == m.col_min).all()
        assert (back.col_max == m.col_max).all()
        assert back.normalized

    def test_grid_geometry_restored(self, tmp_path):
        m = make_normalized(2, height=20, width=15, patch_size=6)
        path = tmp_path / "t.idx"
        save_index(path, m)
        back = load_index(path)
        assert back.grid == GridMeta(20, 15, 6)

    def test_file_size_formula(self, tmp_path):
        # Minimal grid: one patch. 32 header + 2*9*8 ranges + 9*8 payload.
        meta = GridMeta(4, 4, 4)
        m = normalize_minmax(FeatureMatrix(np.random.default_rng(3).random((1, 9)), meta))
        path = tmp_path / "t.idx"
        save_index(path, m)
        assert path.stat().st_size == 32 + 144 + 72
        assert HEADER_SIZE == 32

    def test_header_byte_layout(self, tmp_path):
        m = make_normalized(4)
        path = tmp_path / "t.idx"
        save_index(path, m)
        head = path.read_bytes()[:HEADER_SIZE]
        magic, version, h, w, p, n, f = struct.unpack("<4sIIIIQI", head)
        assert magic == MAGIC == b"SIMP"
        assert version == VERSION == 1
        assert (h, w, p) == (12, 9, 4)
        assert n == m.n_patches and f == 9

    def test_overwrite_and_no_temp_leftovers(self, tmp_path):
        path = tmp_path / "t.idx"
        save_index(path, make_normalized(5))
        save_index(path, make_normalized(6))
        assert (load_index(path).values == make_normalized(6).values).all()
        assert [p.name for p in tmp_path.iterdir()] == ["t.idx"]

    def test_trailing_bytes_ignored(self, tmp_path):
        m = make_normalized(7)
        path = tmp_path / "t.idx"
        save_index(path, m)
        with open(path, "ab") as fh:
            fh.write(b"extra trailing junk")
        assert (load_index(path).values == m.values).all()


class TestSaveValidation:
    def test_raw_matrix_rejected(self, tmp_path):
        rng = np.random.default_rng(8)
        meta = GridMeta(12, 9, 4)
        raw = FeatureMatrix(rng.random((meta.n_patches, 9)), meta)
        with pytest.raises(InvalidParamsError):
            save_index(tmp_path / "t.idx", raw)


class TestLoadValidation:
    def _saved(self, tmp_path):
        path = tmp_path / "t.idx"
        save_index(path, make_normalized(9))
        return path

    def test_bad_magic(self, tmp_path):
        path = self._saved(tmp_path)
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(IndexFormatError, match="magic"):
            load_index(path)

    def test_bad_version(self, tmp_path):
        path = self._saved(tmp_path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(data))
        with pytest.raises(IndexFormatError, match="version"):
            load_index(path)

    def test_truncated_header(self, tmp_path):
        path = self._saved(tmp_path)
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(IndexFormatError, match="header"):
            load_index(path)

    def test_truncated_ranges(self, tmp_path):
        path = self._saved(tmp_path)
        path.write_bytes(path.read_bytes()[: HEADER_SIZE + 50])
        with pytest.raises(IndexFormatError, match="ranges"):
            load_index(path)

    def test_truncated_payload_names_byte_counts(self, tmp_path):
        path = self._saved(tmp_path)
        full = path.read_bytes()
        path.write_bytes(full[:-30])
        with pytest.raises(IndexFormatError, match="expected .* got"):
            load_index(path)

    def test_patch_count_mismatch(self, tmp_path):
        path = self._saved(tmp_path)
        data = bytearray(path.read_bytes())
        data[20:28] = struct.pack("<Q", 5)  # header says 5 patches
        path.write_bytes(bytes(data))
        with pytest.raises(IndexFormatError, match="patches"):
            load_index(path)

    def test_wrong_feature_count(self, tmp_path):
        path = self._saved(tmp_path)
        data = bytearray(path.read_bytes())
        data[28:32] = struct.pack("<I", 4)
        path.write_bytes(bytes(data))
        with pytest.raises(IndexFormatError, match="features"):
            load_index(path)

    def test_inconsistent_geometry(self, tmp_path):
        path = self._saved(tmp_path)
        data = bytearray(path.read_bytes())
        data[16:20] = struct.pack("<I", 100)  # patch size > image
        path.write_bytes(bytes(data))
        with pytest.raises(IndexFormatError, match="geometry"):
            load_index(path)

    def test_manual_little_endian_file_loads(self, tmp_path):
        # Hand-build a file for a 4x4 image, patch 4, one patch row.
        row = np.arange(9, dtype="<f8") / 10.0
        lo = np.zeros(9, dtype="<f8")
        hi = np.ones(9, dtype="<f8")
        blob = (
            struct.pack("<4sIIIIQI", b"SIMP", 1, 4, 4, 4, 1, 9)
            + lo.tobytes()
            + hi.tobytes()
            + row.tobytes()
        )
        path = tmp_path / "hand.idx"
        path.write_bytes(blob)
        m = load_index(path)
        assert (m.values[0] == row).all()
        assert m.grid.n_patches == 1
