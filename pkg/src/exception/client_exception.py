from typing import List, Optional

from fastapi import status

from src.exception.base import BaseCPTException
from src.schemas.exception import ErrorDetail


class InvalidArgumentError(BaseCPTException):
    # 400, exit 2
    status_code = status.HTTP_400_BAD_REQUEST
    exit_code = 2

    def __init__(
        self,
        detail: str = "Invalid argument",
        error_code: str = "invalid_argument",
        **context,
    ):
        super().__init__(detail=detail, error_code=error_code, context=context)


class ConfigError(BaseCPTException):
    # 422, exit 2
    status_code = 422
    exit_code = 2

    def __init__(
        self,
        detail: str = "Invalid configuration",
        error_code: str = "config_error",
        field: Optional[str] = None,
        details: Optional[List[ErrorDetail]] = None,
        **context,
    ):
        if field is not None:
            context["field"] = field
        super().__init__(
            detail=detail, error_code=error_code, context=context, details=details
        )
        self.field = field


class DataError(BaseCPTException):
    # 422, exit 2
    status_code = 422
    exit_code = 2

    def __init__(
        self,
        detail: str = "Invalid data",
        error_code: str = "data_error",
        row: Optional[int] = None,
        **context,
    ):
        if row is not None:
            context["row"] = row
        super().__init__(detail=detail, error_code=error_code, context=context)
        self.row = row
