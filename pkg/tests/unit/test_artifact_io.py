"""
Tests for artifact input and output.
"""

import csv
import dataclasses
import json
from enum import Enum
from pathlib import Path

import numpy as np
import pytest

from splurge_gibbs.artifact_io import (
    TEMP_SUFFIX,
    ArtifactWriter,
    atomic_writer,
    canonical_json,
    read_json,
    sha256_file,
    sha256_text,
    to_jsonable,
)
from splurge_gibbs.exceptions import SplurgeFileOperationError


class _Color(Enum):
    RED = "red"


@dataclasses.dataclass
class _Point:
    x: float
    y: np.ndarray


class TestToJsonable:
    """Test conversion to JSON types."""

    def test_numpy_and_complex(self):
        """Test numpy scalars, arrays and complex numbers."""
        value = {"a": np.int64(3), "b": np.array([1.5, 2.5]), "c": 1 + 2j, "d": np.bool_(True)}
        assert to_jsonable(value) == {"a": 3, "b": [1.5, 2.5], "c": {"re": 1.0, "im": 2.0}, "d": True}

    def test_non_finite(self):
        """Test that non-finite floats become None."""
        assert to_jsonable([float("nan"), np.inf, 1.0]) == [None, None, 1.0]

    def test_enum_path_dataclass(self):
        """Test enums, paths and dataclasses."""
        assert to_jsonable(_Color.RED) == "red"
        assert to_jsonable(Path("a") / "b") == str(Path("a") / "b")
        assert to_jsonable(_Point(x=1.0, y=np.array([2]))) == {"x": 1.0, "y": [2]}

    def test_canonical_json(self):
        """Test key order and hashing of canonical text."""
        assert canonical_json({"b": 1, "a": (2, 3)}) == '{"a":[2,3],"b":1}'
        assert canonical_json({"a": 1, "b": 2}) == canonical_json({"b": 2, "a": 1})
        assert len(sha256_text("x")) == 64


class TestReadJson:
    """Test reading JSON documents."""

    def test_valid(self, tmp_path):
        """Test a valid document."""
        path = tmp_path / "doc.json"
        path.write_text('{"k": [1, 2]}', encoding="utf-8")
        assert read_json(path) == {"k": [1, 2]}

    def test_invalid(self, tmp_path):
        """Test that malformed JSON raises with its position."""
        path = tmp_path / "bad.json"
        path.write_text("{\n  nope", encoding="utf-8")
        with pytest.raises(SplurgeFileOperationError) as exc_info:
            read_json(path)
        assert "line 2" in exc_info.value.details

    def test_missing(self, tmp_path):
        """Test that a missing file raises."""
        with pytest.raises(SplurgeFileOperationError):
            read_json(tmp_path / "absent.json")


class TestAtomicWriter:
    """Test atomic replacement of files."""

    def test_success_replaces_target(self, tmp_path):
        """Test that the target appears only after the block completes."""
        target = tmp_path / "out.txt"
        with atomic_writer(target) as handle:
            handle.write("data")
            assert not target.exists()
        assert target.read_text(encoding="utf-8") == "data"
        assert not (tmp_path / ("out.txt" + TEMP_SUFFIX)).exists()

    def test_failure_leaves_nothing(self, tmp_path):
        """Test that an exception removes the temporary file and keeps the old target."""
        target = tmp_path / "out.txt"
        target.write_text("old", encoding="utf-8")
        with pytest.raises(RuntimeError), atomic_writer(target) as handle:
            handle.write("new")
            raise RuntimeError("boom")
        assert target.read_text(encoding="utf-8") == "old"
        assert list(tmp_path.iterdir()) == [target]


class TestArtifactWriter:
    """Test the artifact writer."""

    @pytest.fixture(autouse=True)
    def setup_method(self, tmp_path):
        """Create a writer in a nested directory."""
        self.writer = ArtifactWriter(tmp_path / "run" / "artifacts")
        yield

    def test_creates_directory(self):
        """Test that the output directory is created."""
        assert self.writer.out_dir.is_dir()
        assert self.writer.written == []

    def test_write_json(self):
        """Test sorted, indented JSON with a trailing newline."""
        path = self.writer.write_json("a.json", {"z": np.float64(0.5), "a": [1j]})
        text = path.read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert json.loads(text) == {"a": [{"re": 0.0, "im": 1.0}], "z": 0.5}
        assert text.index('"a"') < text.index('"z"')

    def test_write_csv_header_union(self):
        """Test that the header collects keys in first-seen order and NaN cells are spelled out."""
        path = self.writer.write_csv("t.csv", [{"n": 1, "x": 0.1}, {"n": 2, "y": float("nan")}])
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["n", "x", "y"]
        assert rows[1] == ["1", "0.1", ""]
        assert rows[2] == ["2", "", "nan"]

    def test_write_lines_and_digests(self):
        """Test line files and digests of everything written."""
        path = self.writer.write_lines("paths.txt", ["0110", "1010"])
        assert path.read_text(encoding="utf-8") == "0110\n1010\n"
        digests = self.writer.digests()
        assert digests == {"paths.txt": sha256_file(path)}
        assert self.writer.written == [path]

    def test_unwritable_directory(self, tmp_path):
        """Test that a file in place of the directory raises."""
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(SplurgeFileOperationError):
            ArtifactWriter(blocker / "sub")
