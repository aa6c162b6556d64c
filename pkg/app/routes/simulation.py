"""
Simulation API Routes
"""
import logging
from typing import List

from fastapi import APIRouter, Depends, HTTPException
from starlette.status import HTTP_400_BAD_REQUEST, HTTP_500_INTERNAL_SERVER_ERROR

from app import __version__
from app.config import get_settings
from app.errors import SimulatorError
from app.middleware.auth import verify_api_key
from app.models import (
    CurveRequest,
    CurveResponse,
    ErrorResponse,
    HealthCheckResponse,
    PresetSummary,
    SimConfig,
    SimulationResponse,
)
from app.services.artifacts import dump_kernel_curves
from app.services.engine import run_simulation
from app.services.manifests import list_presets
from app.services.metrics import impact_factor_matrix, mean_average_if


logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/health", response_model=HealthCheckResponse, tags=["Health"])
def health_check():
    """Liveness probe; no authentication"""
    return HealthCheckResponse(
        status="healthy",
        version=__version__,
        presets=[preset.name for preset in list_presets()],
    )


@router.get("/presets", response_model=List[PresetSummary], tags=["Presets"])
def presets():
    """Shipped run manifests"""
    return list_presets()


@router.post("/curves", response_model=CurveResponse, tags=["Kernel"])
def kernel_curves(request: CurveRequest):
    """Sample the citation-count and age factors at unit steps"""
    tables = dump_kernel_curves(request.params, request.n_max, request.t_min)
    return CurveResponse(
        params=request.params,
        count_curve=list(zip(tables.count["n"].tolist(), tables.count["factor"].tolist())),
        age_curve=list(zip(tables.age["t"].tolist(), tables.age["factor"].tolist())),
    )


@router.post(
    "/simulate",
    response_model=SimulationResponse,
    responses={
        400: {"model": ErrorResponse},
        401: {"model": ErrorResponse},
        403: {"model": ErrorResponse},
        500: {"model": ErrorResponse},
    },
    tags=["Simulation"],
    summary="Run one simulation",
)
def simulate(config: SimConfig, api_key: str = Depends(verify_api_key)):
    """
    Run a simulation synchronously and return its impact-factor matrix.
    Large runs are refused; use the CLI for those.
    """
    settings = get_settings()
    if config.total_articles > settings.max_api_articles:
        raise HTTPException(
            status_code=HTTP_400_BAD_REQUEST,
            detail={
                "status": "error",
                "message": (
                    f"{config.total_articles} articles requested; the API runs at most "
                    f"{settings.max_api_articles}"
                ),
            },
        )

    logger.info(f"Simulation requested: {config.total_articles} articles, seed {config.seed}")
    try:
        result = run_simulation(config)
        matrix = impact_factor_matrix(result)
        score = mean_average_if(matrix) if config.years >= 3 else None
    except SimulatorError as e:
        raise HTTPException(
            status_code=HTTP_400_BAD_REQUEST,
            detail={"status": "error", "message": str(e)},
        )
    except Exception as e:
        logger.exception(f"Unexpected error in simulation endpoint: {str(e)}")
        raise HTTPException(
            status_code=HTTP_500_INTERNAL_SERVER_ERROR,
            detail={"status": "error", "message": "Simulation failed"},
        )

    return SimulationResponse(
        total_articles=len(result.articles),
        citation_edges=result.edge_count,
        abandoned_slots=result.abandoned_slots,
        duplicate_refs=result.duplicate_refs,
        mean_average_if=score,
        impact_factors=matrix.series(),
        warnings=result.warnings,
        runtime_seconds=result.runtime_seconds,
    )
