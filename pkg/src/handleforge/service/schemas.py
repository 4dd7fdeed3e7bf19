"""Request/response models of the handleforge service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field


class SegmentModel(BaseModel):
    kind: str
    interval: list[float | None]
    coeffs: dict[str, Any]


class ProfileModel(BaseModel):
    domain: list[float | None]
    continuity: str
    segments: list[SegmentModel]


class ConstructOuterRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda")
    a: float = 1.0
    eps: float
    relax: bool = False
    grid: int = 1000
    seed: int = 42


class ConstructInnerRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda")
    eps: float
    grid: int = 1000
    seed: int = 42


class ConstructQuadraticRequest(BaseModel):
    A: list[list[float]]
    B: list[list[float]]
    r: float
    eps: float
    grid: int = 1000
    seed: int = 42


class ConstructResponse(BaseModel):
    passed: bool
    handle: dict[str, Any]
    certification: dict[str, Any]


class VerifyRequest(BaseModel):
    profile: dict[str, Any]              # profile document or handle document
    condition: Literal["2", "6", "8", "9", "cap"]
    grid: int = 1000
    use: Literal["profile", "inverse"] = "profile"
    levi_oracle: int | None = None       # 2 or 4: cross-check Levi spectra
    seed: int = 42


class LeviOracleRow(BaseModel):
    s: float
    strict_pair: bool
    reversed_pair: bool
    min_eig: float
    max_eig: float
    agree: bool


class VerifyResponse(BaseModel):
    passed: bool
    condition: str
    direction: str
    min_margin: float
    location: float
    n_points: int
    classification: str
    levi_oracle: list[LeviOracleRow] | None = None
    levi_agree: bool | None = None


class ExportRequest(BaseModel):
    profile: dict[str, Any]
    what: Literal["profile", "fprime", "region"]
    n_points: int = 400
