from fastapi import status

from src.exception.base import BaseCPTException


class NumericalError(BaseCPTException):
    # 500, exit 3
    status_code = status.HTTP_500_INTERNAL_SERVER_ERROR
    exit_code = 3

    def __init__(
        self,
        detail: str = "Numerical failure",
        error_code: str = "numerical_error",
        **context,
    ):
        super().__init__(detail=detail, error_code=error_code, context=context)


class CalibrationFailureError(NumericalError):
    def __init__(
        self,
        detail: str = "Degenerate null statistic distribution",
        error_code: str = "calibration_failure",
        **context,
    ):
        super().__init__(detail=detail, error_code=error_code, **context)


class ResourceLimitError(NumericalError):
    # 503, exit 3
    status_code = status.HTTP_503_SERVICE_UNAVAILABLE

    def __init__(
        self,
        detail: str = "Computation budget exceeded",
        error_code: str = "resource_limit",
        **context,
    ):
        super().__init__(detail=detail, error_code=error_code, **context)
