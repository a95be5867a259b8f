"""Configuration and report models shared by the service and the CLI."""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator

from . import SCHEMA_VERSION

EXPERIMENTS = (
    "index-1d",
    "index-cylinder",
    "pairing",
    "field-continuity",
    "cyclic-check",
    "leftover-check",
    "trprime-check",
)

Experiment = Literal[
    "index-1d",
    "index-cylinder",
    "pairing",
    "field-continuity",
    "cyclic-check",
    "leftover-check",
    "trprime-check",
]

DEFAULT_TOLERANCES = {
    "index": 1e-3,
    "pairing": 0.05,
    "smoothing_drift": 1e-3,
    "leftover": 1e-6,
    "trprime": 1e-6,
    "cocycle": 1e-6,
    "chain_identity": 1e-8,
    "scaling": 1e-12,
    "section": 1e-2,
    "section_ratio": 0.25,
    "slope": 0.8,
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SymbolSpec(_Strict):
    name: str = "moebius"
    params: list[float] = Field(default_factory=lambda: [1.0])


class GreenSpec(_Strict):
    name: str = "zero"
    params: list[float] = Field(default_factory=list)


class GridSpec(_Strict):
    N: int = Field(512, ge=8, le=8192)
    L: PositiveFloat = 40.0


class FiberGridSpec(_Strict):
    N_v: int = Field(1024, ge=16, le=1 << 16)
    V: PositiveFloat = 40.0


class ExperimentConfig(_Strict):
    schema_version: str = SCHEMA_VERSION
    experiment: Experiment = "index-1d"
    symbol: SymbolSpec = Field(default_factory=SymbolSpec)
    green: GreenSpec = Field(default_factory=GreenSpec)
    grid: GridSpec | None = None
    fiber_grid: FiberGridSpec = Field(default_factory=FiberGridSpec)
    n_max: int = Field(8, ge=0, le=64)
    hbar_schedule: list[PositiveFloat] = Field(
        default_factory=lambda: [2.0 ** -k for k in range(1, 7)])
    tolerances: dict[str, PositiveFloat] = Field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    chains: int = Field(50, ge=1, le=1000)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v: str) -> str:
        if v.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
            raise ValueError(f"unsupported schema version {v}, expected {SCHEMA_VERSION}")
        return v

    @field_validator("tolerances")
    @classmethod
    def _merge_tolerances(cls, v: dict) -> dict:
        unknown = set(v) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerances {sorted(unknown)}")
        return {**DEFAULT_TOLERANCES, **v}

    def tol(self, name: str) -> float:
        return float(self.tolerances[name])


class CheckResult(BaseModel):
    name: str
    value: float
    tolerance: float
    passed: bool


class IndexResult(BaseModel):
    svd: int | None = None
    trace: float | None = None
    pairing: float | None = None
    winding: int | None = None


class Report(BaseModel):
    schema_version: str = SCHEMA_VERSION
    experiment: str = ""
    status: Literal["ok", "checks_failed", "empty"] = "empty"
    config: dict = Field(default_factory=dict)
    checks: list[CheckResult] = Field(default_factory=list)
    index: IndexResult | None = None
    tables: dict[str, list[dict]] = Field(default_factory=dict)
    calibration: dict[str, float | str] = Field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class ErrorReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    error: Literal["ConfigError", "NumericalFailure"]
    message: str
    check: str | None = None
