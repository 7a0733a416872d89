"""
Artifact input and output.

Stage results are written as JSON documents, CSV tables or plain line files. Every file is
first written next to its target and then moved into place, so a crashed run never leaves
a half-written artifact behind.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
from collections.abc import Iterable, Iterator, Mapping
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import IO, Any

import numpy as np

from splurge_gibbs.exceptions import SplurgeFileOperationError

logger = logging.getLogger(__name__)

DEFAULT_ENCODING = "utf-8"
TEMP_SUFFIX = ".partial"


def _safe_open_file(
    file_path: Path,
    *,
    mode: str,
    encoding: str | None = DEFAULT_ENCODING,
    newline: str | None = None,
) -> IO[Any]:
    """
    Open a file, converting OS failures to SplurgeFileOperationError.

    Raises:
        SplurgeFileOperationError: If the file is missing, not permitted or cannot be opened
    """
    try:
        return open(file_path, mode=mode, encoding=encoding, newline=newline)
    except FileNotFoundError as e:
        msg = f"File not found: {file_path}"
        raise SplurgeFileOperationError(msg, details=str(e))
    except PermissionError as e:
        msg = f"Permission denied: {file_path}"
        raise SplurgeFileOperationError(msg, details=str(e))
    except OSError as e:
        msg = f"Failed to open file: {file_path}"
        raise SplurgeFileOperationError(msg, details=str(e))


@contextmanager
def atomic_writer(
    file_path: Path,
    *,
    newline: str | None = None,
) -> Iterator[IO[Any]]:
    """Yield a handle on a temporary sibling file and move it onto ``file_path`` on success."""
    temp_path = file_path.with_name(file_path.name + TEMP_SUFFIX)
    handle = _safe_open_file(temp_path, mode="w", newline=newline)
    try:
        with handle:
            yield handle
        os.replace(temp_path, file_path)
    except BaseException:
        temp_path.unlink(missing_ok=True)
        raise


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy scalars and arrays, complex numbers, enums, paths and dataclasses to JSON types.

    Non-finite floats become None.
    """
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(dataclasses.asdict(value))
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def canonical_json(value: Any) -> str:
    """Key-sorted compact JSON used for hashing."""
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode(DEFAULT_ENCODING)).hexdigest()


def sha256_file(file_path: Path) -> str:
    digest = hashlib.sha256()
    with _safe_open_file(file_path, mode="rb", encoding=None) as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def read_text(file_path: str | Path) -> str:
    with _safe_open_file(Path(file_path), mode="r") as handle:
        return str(handle.read())


def read_json(file_path: str | Path) -> Any:
    """
    Raises:
        SplurgeFileOperationError: If the file cannot be read or is not valid JSON
    """
    text = read_text(file_path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        msg = f"Invalid JSON in {file_path}"
        raise SplurgeFileOperationError(msg, details=f"line {e.lineno}, column {e.colno}: {e.msg}")


class ArtifactWriter:
    """Writes stage artifacts into one output directory and remembers what it wrote."""

    def __init__(
        self,
        out_dir: str | Path,
    ) -> None:
        self._out_dir = Path(out_dir)
        try:
            self._out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            msg = f"Cannot create output directory: {self._out_dir}"
            raise SplurgeFileOperationError(msg, details=str(e))
        self._written: list[Path] = []

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    @property
    def written(self) -> list[Path]:
        return list(self._written)

    def _target(self, name: str) -> Path:
        path = self._out_dir / name
        self._written.append(path)
        return path

    def write_json(
        self,
        name: str,
        data: Any,
    ) -> Path:
        path = self._target(name)
        with atomic_writer(path) as handle:
            json.dump(to_jsonable(data), handle, indent=2, sort_keys=True)
            handle.write("\n")
        logger.debug("Wrote %s", path)
        return path

    def write_csv(
        self,
        name: str,
        rows: Iterable[Mapping[str, Any]],
    ) -> Path:
        """Rows become CSV records; the header is the union of keys in first-seen order."""
        materialized = [dict(row) for row in rows]
        fieldnames: list[str] = []
        for row in materialized:
            fieldnames.extend(key for key in row if key not in fieldnames)
        path = self._target(name)
        with atomic_writer(path, newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=fieldnames)
            writer.writeheader()
            for row in materialized:
                writer.writerow({k: self._cell(v) for k, v in row.items()})
        logger.debug("Wrote %s (%d rows)", path, len(materialized))
        return path

    def write_lines(
        self,
        name: str,
        lines: Iterable[str],
    ) -> Path:
        path = self._target(name)
        with atomic_writer(path) as handle:
            for line in lines:
                handle.write(line)
                handle.write("\n")
        return path

    @staticmethod
    def _cell(value: Any) -> Any:
        converted = to_jsonable(value)
        if converted is None:
            return "nan"
        if isinstance(converted, float):
            return repr(converted)
        return converted

    def digests(self) -> dict[str, str]:
        """sha256 of every artifact written so far, keyed by file name."""
        return {path.name: sha256_file(path) for path in self._written if path.exists()}
