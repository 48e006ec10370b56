import logging

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from starlette.middleware.cors import CORSMiddleware

from src.core.config import get_settings
from src.core.config_logging import setup_logging
from src.exception.exception_handlers import setup_exception_handlers
from src.routers.v1.decisions import router as decisions_router
from src.routers.v1.rates import router as rates_router

logger = logging.getLogger(__name__)


def get_app() -> FastAPI:
    """
    Get FastAPI application.

    Exposes the test runner and the closed-form rates over HTTP.

    :return: application.
    """
    settings = get_settings()
    setup_logging(settings.log_level, log_file=settings.log_file)
    app = FastAPI(
        title="heavytail-cpt",
        docs_url="/docs",
        openapi_url="/openapi.json",
        default_response_class=JSONResponse,
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=[],
        allow_credentials=True,
        allow_origin_regex=r"http://localhost:.*",
        allow_methods=["*"],
        allow_headers=["*"],
    )
    logger.info("Starting application")
    app.include_router(decisions_router)
    app.include_router(rates_router)
    setup_exception_handlers(app)

    return app
