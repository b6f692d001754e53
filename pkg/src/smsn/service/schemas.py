"""Pydantic request/response models for the SMSN service."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class MixingSpec(BaseModel):
    type: Literal["sn", "st", "sde", "ssl"]
    nu: Optional[float] = None
    q: Optional[float] = None


class ParamsSpec(BaseModel):
    xi: List[float]
    Omega: List[List[float]]
    alpha: List[float]
    mixing: MixingSpec


class SampleRequest(BaseModel):
    params: ParamsSpec
    n: int = Field(ge=1)
    seed: int = 0


class SampleResponse(BaseModel):
    columns: List[str]
    data: List[List[float]]


class DensityRequest(BaseModel):
    params: ParamsSpec
    at: List[float]
    tol: float = 1e-8


class DensityResponse(BaseModel):
    value: float


class CheckMomentsResponse(BaseModel):
    lhs: float
    rhs: float
    holds: bool
    a: float
    b: float
    c: float


class MaxskewResponse(BaseModel):
    direction: List[float]
    gamma1: float
    condition_ok: bool


class EstimateRequest(BaseModel):
    data: List[List[float]]
    restarts: int = 8
    max_iter: int = 500
    tol: float = 1e-10
    seed: int = 0


class EstimateResponse(BaseModel):
    direction: List[float]
    gamma1: float
    converged: bool
    iterations: int


class AlphaRule(BaseModel):
    rule: Optional[str] = None
    norm: Optional[float] = None
    vector: Optional[List[float]] = None

    def as_dict(self) -> dict:
        if self.vector is not None:
            return {"vector": self.vector}
        return {"rule": self.rule or "unit_scaled", "norm": self.norm if self.norm is not None else 3.0}


class OmegaRule(BaseModel):
    rule: Optional[str] = None
    low: int = 1
    high: int = 5
    per_replication: bool = True
    diag: Optional[List[float]] = None

    def as_dict(self) -> dict:
        if self.diag is not None:
            return {"diag": self.diag, "per_replication": self.per_replication}
        return {
            "rule": self.rule or "random_int",
            "low": self.low,
            "high": self.high,
            "per_replication": self.per_replication,
        }


class EstimatorOpts(BaseModel):
    restarts: int = 8
    max_iter: int = 500
    tol: float = 1e-10


class SimulateRequest(BaseModel):
    p: List[int]
    n: List[int]
    nu: List[float]
    rho: List[float]
    replications: int = 200
    seed: int = 0
    alpha: AlphaRule = AlphaRule()
    omega: OmegaRule = OmegaRule()
    estimator: EstimatorOpts = EstimatorOpts()
    dump_replications: bool = False


class SimulateResponse(BaseModel):
    csv: str
    replications_csv: Optional[str] = None


class ErrorResponse(BaseModel):
    detail: str
