from typing import Any, Dict, List, Optional

from src.schemas.exception import ErrorDetail, ErrorResponse


class BaseCPTException(Exception):
    # Base error carrying an error code, context and both exit/status codes

    status_code: int = 500
    exit_code: int = 3

    def __init__(
        self,
        detail: str,
        error_code: str,
        context: Optional[Dict[str, Any]] = None,
        details: Optional[List[ErrorDetail]] = None,
    ):
        super().__init__(detail)
        self.message = detail
        self.error_code = error_code
        self.context = context or {}
        self.details = details or []
        self.detail = self.format_detail()

    def format_detail(self) -> ErrorResponse:
        return ErrorResponse(
            message=self.message,
            error_code=self.error_code,
            status_code=self.status_code,
            exit_code=self.exit_code,
            detail=self.details,
            context=self.context,
        )

    def __str__(self) -> str:
        return self.message
