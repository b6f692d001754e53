"""FastAPI service exposing the SMSN library over HTTP.

Invalid parameters map to 422, runtime failures (non-convergent quadrature and
the like) to 500; payloads follow the shared JSON parameter schema.
"""

from __future__ import annotations

import warnings

from fastapi import FastAPI, HTTPException

from .. import mixing as mx
from .. import model, simulation, skewness
from ..errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NotSPDError,
    QuadratureError,
    SmsnError,
)
from ..numerics import RngStream
from . import schemas

app = FastAPI(
    title="smsn",
    description="Maximal-skewness projections for scale mixtures of skew-normal vectors",
    version="0.1.0",
)


def _params_from_spec(spec: schemas.ParamsSpec) -> model.SmsnParams:
    return model.params_from_dict(spec.model_dump(exclude_none=True))


def _invalid(exc: SmsnError) -> HTTPException:
    # malformed arguments -> 422 (client error); other domain failures,
    # e.g. undefined mixing moments, -> 400 (runtime error)
    if isinstance(exc, (InvalidParameterError, DimensionMismatchError, NotSPDError)):
        return HTTPException(status_code=422, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


@app.get("/api/health")
def health():
    return {"status": "ok"}


@app.post("/api/sample", response_model=schemas.SampleResponse)
def api_sample(req: schemas.SampleRequest):
    try:
        params = _params_from_spec(req.params)
        X = model.sample(params, req.n, RngStream(req.seed))
    except SmsnError as exc:
        raise _invalid(exc)
    return schemas.SampleResponse(
        columns=[f"x{i + 1}" for i in range(params.dim)],
        data=X.tolist(),
    )


@app.post("/api/density", response_model=schemas.DensityResponse)
def api_density(req: schemas.DensityRequest):
    try:
        params = _params_from_spec(req.params)
        value = model.density_smsn(req.at, params, tol=req.tol)
    except QuadratureError as exc:
        raise HTTPException(status_code=500, detail=str(exc))
    except SmsnError as exc:
        raise _invalid(exc)
    return schemas.DensityResponse(value=value)


@app.post("/api/check-moments", response_model=schemas.CheckMomentsResponse)
def api_check_moments(req: schemas.ParamsSpec):
    try:
        params = _params_from_spec(req)
        holds, lhs, rhs = mx.check_moment_condition(params.mixing)
        coef = mx.coefficients(params.mixing)
    except SmsnError as exc:
        raise _invalid(exc)
    return schemas.CheckMomentsResponse(
        lhs=lhs, rhs=rhs, holds=holds, a=coef.a, b=coef.b, c=coef.c
    )


@app.post("/api/maxskew", response_model=schemas.MaxskewResponse)
def api_maxskew(req: schemas.ParamsSpec):
    try:
        params = _params_from_spec(req)
        holds, _, _ = mx.check_moment_condition(params.mixing)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", skewness.MomentConditionWarning)
            direction = skewness.analytic_max_direction(params)
            gamma1 = skewness.analytic_max_skewness(params)
    except SmsnError as exc:
        raise _invalid(exc)
    return schemas.MaxskewResponse(
        direction=direction.tolist(), gamma1=gamma1, condition_ok=holds
    )


@app.post("/api/estimate", response_model=schemas.EstimateResponse)
def api_estimate(req: schemas.EstimateRequest):
    try:
        res = skewness.estimate_max_direction(
            req.data,
            restarts=req.restarts,
            max_iter=req.max_iter,
            tol=req.tol,
            rng=RngStream(req.seed),
        )
    except SmsnError as exc:
        raise _invalid(exc)
    return schemas.EstimateResponse(
        direction=res.direction.tolist(),
        gamma1=res.gamma1,
        converged=res.converged,
        iterations=res.iterations,
    )


@app.post("/api/simulate", response_model=schemas.SimulateResponse)
def api_simulate(req: schemas.SimulateRequest):
    try:
        cfg = simulation.SimulationConfig.from_dict(
            {
                "p": req.p,
                "n": req.n,
                "nu": req.nu,
                "rho": req.rho,
                "replications": req.replications,
                "seed": req.seed,
                "alpha": req.alpha.as_dict(),
                "omega": req.omega.as_dict(),
                "estimator": req.estimator.model_dump(),
            }
        )
        report = simulation.run_experiment(cfg, keep_raw=req.dump_replications)
    except SmsnError as exc:
        raise _invalid(exc)
    return schemas.SimulateResponse(
        csv=simulation.report_to_csv(report),
        replications_csv=(
            simulation.replications_to_csv(report) if req.dump_replications else None
        ),
    )
