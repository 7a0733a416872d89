"""
Run configuration schema.

A run is described by one JSON document; pydantic validates it after dotted
``key.path=value`` overrides have been applied. Every schema failure is reported as a
SplurgeConfigurationError naming the failing path.

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from splurge_gibbs.artifact_io import read_text
from splurge_gibbs.exceptions import SplurgeConfigurationError, SplurgeFileOperationError

logger = logging.getLogger(__name__)

Stage = Literal["validate", "rpf", "decompose", "scan", "distribution", "verify", "sample"]
STAGE_ORDER: tuple[str, ...] = ("validate", "rpf", "decompose", "scan", "distribution", "verify", "sample")
DECOMPOSE_GRID: tuple[int, ...] = (8, 16, 32, 64, 128, 256)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ScanConfig(_Section):
    delta: float = Field(0.1, gt=0)
    t_max: float = Field(14.0, alias="T", gt=0)
    n_max: int = Field(64, ge=2)
    grid: float = Field(0.01, gt=0)
    threshold: float = Field(0.2, gt=0, lt=1)
    trials: int = Field(8, ge=1)
    seed: int = Field(0, ge=0)
    calibrate: bool = False
    variance_fit: bool = False


class DistributionConfig(_Section):
    n: int = Field(64, ge=1)
    t_points: int = Field(201, ge=2)


class VerifyConfig(_Section):
    n_grid: list[int] = Field(default_factory=lambda: [16, 64, 256])
    t0: list[float] = Field(default_factory=lambda: [8.0], alias="T0")
    edgeworth: Literal["classical", "literal"] = "classical"

    @field_validator("n_grid")
    @classmethod
    def _positive_grid(cls, value: list[int]) -> list[int]:
        if not value or any(n < 1 for n in value):
            msg = "n_grid must be a non-empty list of positive integers"
            raise ValueError(msg)
        return sorted(set(value))

    @field_validator("t0", mode="before")
    @classmethod
    def _listify(cls, value: Any) -> Any:
        return value if isinstance(value, list) else [value]


class SampleConfig(_Section):
    n: int = Field(64, ge=1)
    n_samples: int = Field(100_000, alias="N", ge=2)
    seed: int = Field(7, ge=0)
    t_values: list[float] = Field(default_factory=lambda: [0.5, 1.0, 3.141592653589793])
    export: bool = True


class ExpectConfig(_Section):
    """Assertions checked after the stages ran; unset fields are not asserted."""

    aperiodicity_max: int | None = None
    max_tail_error: float | None = 1e-9
    variance_class: Literal["Growing", "Bounded", "Indeterminate"] | None = None
    lattice_class: Literal["IrreducibleNonlattice", "Lattice", "VarianceBounded", "Indeterminate"] | None = None
    span: float | None = None
    span_tol: float = 1e-3
    verdicts: dict[str, str] = Field(default_factory=dict)
    max_errors: dict[str, float] = Field(default_factory=dict)
    max_sample_flags: int | None = None


class RunConfig(_Section):
    model: str
    observable: str | dict[str, float] | None = None
    alpha: float = Field(1.0, gt=0, le=1)
    window: int = Field(64, ge=1)
    tol: float = Field(1e-10, gt=0)
    k_cap: int = Field(200, ge=1)
    stages: list[Stage] = Field(default_factory=lambda: list(STAGE_ORDER))
    scan: ScanConfig = Field(default_factory=ScanConfig)
    distribution: DistributionConfig = Field(default_factory=DistributionConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    sample: SampleConfig = Field(default_factory=SampleConfig)
    expect: ExpectConfig = Field(default_factory=ExpectConfig)

    @field_validator("stages")
    @classmethod
    def _ordered(cls, value: list[str]) -> list[str]:
        return [stage for stage in STAGE_ORDER if stage in value]

    def required_horizon(self, depth: int) -> int:
        """
        Smallest horizon covering every index the requested stages touch.

        The variance verdict used by decompose and scan always sees the full DECOMPOSE_GRID,
        so it does not depend on which other stages run.
        """
        needs = [self.window]
        if "decompose" in self.stages or "scan" in self.stages:
            needs.append(max(DECOMPOSE_GRID))
        if "scan" in self.stages:
            needs.append(self.scan.n_max)
        if "distribution" in self.stages:
            needs.append(self.distribution.n)
        if "verify" in self.stages:
            needs.append(max(self.verify.n_grid))
        if "sample" in self.stages:
            needs.append(self.sample.n + depth)
        return max(needs) + 1

    def to_document(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


class ConfigHelper:
    """Loading, overriding and validating run configurations."""

    @staticmethod
    def parse_override(text: str) -> tuple[list[str], Any]:
        """
        Split ``a.b.c=value``; the value is read as JSON when possible, else as a string.

        Raises:
            SplurgeConfigurationError: If the text has no '=' or an empty key
        """
        key, sep, raw = text.partition("=")
        path = [part for part in key.strip().split(".") if part]
        if not sep or not path:
            msg = f"Malformed override '{text}'"
            raise SplurgeConfigurationError(msg, details="Expected key.path=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        return path, value

    @classmethod
    def apply_overrides(
        cls,
        document: dict[str, Any],
        overrides: list[str] | tuple[str, ...],
    ) -> dict[str, Any]:
        result = json.loads(json.dumps(document))
        for text in overrides:
            path, value = cls.parse_override(text)
            node = result
            for part in path[:-1]:
                child = node.get(part)
                if not isinstance(child, dict):
                    child = {}
                    node[part] = child
                node = child
            node[path[-1]] = value
            logger.debug("Override %s = %r", ".".join(path), value)
        return result

    @staticmethod
    def validate(document: Any) -> RunConfig:
        """
        Raises:
            SplurgeConfigurationError: With the dotted path of the first failing field
        """
        if not isinstance(document, dict):
            msg = "Config document must be a JSON object"
            raise SplurgeConfigurationError(msg, details=f"Got {type(document).__name__}")
        try:
            return RunConfig.model_validate(document)
        except ValidationError as e:
            first = e.errors()[0]
            path = ".".join(str(part) for part in first["loc"]) or "<root>"
            msg = f"Invalid config at '{path}'"
            raise SplurgeConfigurationError(msg, details=f"{first['msg']} ({e.error_count()} error(s))")

    @classmethod
    def load(
        cls,
        config_path: str | Path,
        *,
        overrides: list[str] | tuple[str, ...] = (),
    ) -> RunConfig:
        """
        Read, override and validate a config file.

        Raises:
            SplurgeConfigurationError: If the file is unreadable, not JSON or fails the schema
        """
        try:
            text = read_text(config_path)
        except SplurgeFileOperationError as e:
            raise SplurgeConfigurationError(e.message, details=e.details) from e
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            msg = f"Config {config_path} is not valid JSON"
            raise SplurgeConfigurationError(msg, details=f"line {e.lineno}, column {e.colno}: {e.msg}") from e
        if not isinstance(document, dict):
            return cls.validate(document)
        return cls.validate(cls.apply_overrides(document, overrides))
