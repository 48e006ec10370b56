from pydantic import BaseModel, Field
from typing import List, Optional, Dict, Any
from datetime import datetime


class ErrorDetail(BaseModel):
    message: str = Field(..., description="Error message")
    error_code: Optional[str] = Field(None, description="Machine-readable error code")
    field: Optional[str] = Field(None, description="Offending field or CSV row")
    context: Optional[dict] = Field(None, description="Extra context")


class ErrorResponse(BaseModel):
    message: str = Field(..., description="Error message")
    error_code: str = Field(..., description="Machine-readable error code")

    timestamp: datetime = Field(
        default_factory=datetime.now, description="When the error was raised"
    )
    status_code: int = Field(..., description="HTTP status code")
    exit_code: int = Field(..., description="CLI exit code")
    detail: List[ErrorDetail] = Field(default_factory=list, description="Error details")
    context: Dict[str, Any] = Field(default_factory=dict, description="Extra context")
