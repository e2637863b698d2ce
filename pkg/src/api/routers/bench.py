from dataclasses import asdict
from typing import Literal

from fastapi import APIRouter, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from calculations.benchmarks import (
    RunConfig,
    build_problem,
    check_ablation_values,
    matvec_bench_task,
    resolve_params,
    solve_bench_task,
)
from calculations.chebyshev import cheb_nodes, lebesgue_estimate
from calculations.error_model import theorem_bound
from calculations.kernels import derived_constants
from calculations.orchestration import launch_ablation
from calculations.validation import validate_task
from helpers.errors import NsMatvecError

router = APIRouter(
    prefix="/bench",
    tags=["bench"],
)


class AblationBody(BaseModel):
    config: RunConfig
    axis: Literal["N_t", "N_sigma", "M", "N"]
    values: list[float] = Field(min_length=1)


@router.post("/matvec")
def queue_matvec(config: RunConfig):
    task = matvec_bench_task.delay(config.model_dump())
    return JSONResponse({"task_id": task.id})


@router.post("/solve")
def queue_solve(config: RunConfig):
    if config.auto_eps is not None:
        raise HTTPException(status_code=400, detail="solve runs use the regime parameters; drop auto_eps")
    task = solve_bench_task.delay(config.model_dump())
    return JSONResponse({"task_id": task.id})


@router.post("/ablate")
def queue_ablation(body: AblationBody):
    try:
        check_ablation_values(body.values)
    except NsMatvecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    task = launch_ablation.delay(body.config.model_dump(), body.axis, body.values)
    return JSONResponse({"task_id": task.id})


@router.post("/validate")
def queue_validation():
    task = validate_task.delay()
    return JSONResponse({"task_id": task.id})


@router.post("/params")
def describe_params(config: RunConfig):
    """Resolve approximation parameters and their error indicator without running anything."""
    try:
        spec = build_problem(config.model_copy(update={"n": 1}) if not config.data else config).spec
        params = resolve_params(config, spec, config.dim)
        consts = derived_constants(spec, params)
        if spec.sigma_min < spec.sigma_max:
            lebesgue = lebesgue_estimate(cheb_nodes(spec.sigma_min, spec.sigma_max, params.n_sigma))
        else:
            lebesgue = 1.0
        budget = theorem_bound(spec, params, consts, lebesgue, config.dim)
    except NsMatvecError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return JSONResponse({
        "params": asdict(params),
        "constants": asdict(consts),
        "budget": asdict(budget),
    })
