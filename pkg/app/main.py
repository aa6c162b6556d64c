"""
Journal Impact Factor Simulator - HTTP application
Runs citation simulations and samples the citation kernels over HTTP
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException
from starlette.status import HTTP_422_UNPROCESSABLE_ENTITY, HTTP_500_INTERNAL_SERVER_ERROR

from app import __version__
from app.config import get_settings
from app.routes import simulation_router


# Configure logging
logging.basicConfig(
    level=getattr(logging, get_settings().log_level.upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(f"🚀 Journal Impact Factor Simulator API v{__version__} starting up...")
    settings = get_settings()
    logger.info(f"📌 Simulations capped at {settings.max_api_articles} articles per request")
    if not settings.api_secret_key:
        logger.warning("🔓 API key check disabled (empty api_secret_key)")

    yield

    logger.info("👋 Journal Impact Factor Simulator API shutting down...")


app = FastAPI(
    title="Journal Impact Factor Simulator",
    description="""
## Journal publication and citation simulator

Publishes articles month by month across a set of journals in one discipline,
fills each article's references by rejection sampling against a three-factor
citation kernel (quality, citations so far, age) and reports two-year impact factors.

### Endpoints
- `POST /api/simulate` - run one (small) simulation, requires `x-api-key`
- `POST /api/curves` - sample the kernel curves
- `GET /api/presets` - shipped experiment manifests
    """,
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
    lifespan=lifespan
)


@app.exception_handler(HTTPException)
async def http_exception_handler(request: Request, exc: HTTPException):
    """Unwrap {"status", "message"} details so error bodies stay flat"""
    content = exc.detail if isinstance(exc.detail, dict) else {"status": "error", "message": str(exc.detail)}
    return JSONResponse(status_code=exc.status_code, content=content)


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    first = exc.errors()[0] if exc.errors() else {}
    field = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
    return JSONResponse(
        status_code=HTTP_422_UNPROCESSABLE_ENTITY,
        content={"status": "error", "message": f"{field}: {first.get('msg', 'invalid request')}"}
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.exception(f"Unhandled exception: {str(exc)}")
    return JSONResponse(
        status_code=HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "status": "error",
            "message": "An unexpected error occurred"
        }
    )


app.include_router(
    simulation_router,
    prefix="/api",
)


@app.get("/", tags=["Root"])
async def root():
    return {
        "name": "Journal Impact Factor Simulator",
        "version": __version__,
        "status": "running",
        "docs": "/docs",
        "endpoints": {
            "health": "/api/health",
            "presets": "/api/presets",
            "curves": "/api/curves",
            "simulate": "/api/simulate"
        }
    }


if __name__ == "__main__":
    import uvicorn
    settings = get_settings()
    uvicorn.run(
        "app.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=settings.debug
    )
