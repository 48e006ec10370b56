import logging

from fastapi import FastAPI, Request, status
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import UJSONResponse
from pydantic import ValidationError

from src.exception.base import BaseCPTException

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def exit_code_for(exc: BaseException) -> int:
    """CLI exit code: 2 for config/data errors, 3 for numerical or unexpected failures."""
    if isinstance(exc, BaseCPTException):
        return exc.exit_code
    if isinstance(exc, ValidationError):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


def setup_exception_handlers(app: FastAPI) -> None:
    @app.exception_handler(BaseCPTException)
    async def cpt_exception_handler(request: Request, exc: BaseCPTException) -> UJSONResponse:
        logger.warning(
            f"Error {exc.status_code}: {exc.message}",
            extra={
                "error_code": exc.error_code,
                "path": request.url.path,
                "method": request.method,
                **exc.context,
            },
        )
        return UJSONResponse(status_code=exc.status_code, content=jsonable_encoder(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_exception_handler(
        request: Request, exc: RequestValidationError
    ) -> UJSONResponse:
        errors = [
            {
                "field": " -> ".join(str(loc) for loc in error["loc"]),
                "message": error["msg"],
                "type": error["type"],
            }
            for error in exc.errors()
        ]
        logger.info(f"Request validation failed: {errors}", extra={"path": request.url.path})
        return UJSONResponse(
            status_code=status.HTTP_422_UNPROCESSABLE_CONTENT,
            content={
                "message": "Request validation failed",
                "error_code": "validation_error",
                "validation_errors": jsonable_encoder(errors),
            },
        )

    @app.exception_handler(Exception)
    async def generic_exception_handler(request: Request, exc: Exception) -> UJSONResponse:
        logger.error(
            f"Unhandled error: {exc}",
            exc_info=True,
            extra={"path": request.url.path, "method": request.method},
        )
        return UJSONResponse(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            content={
                "message": "Internal server error",
                "error_code": "internal_server_error",
                "detail": str(exc),
            },
        )
