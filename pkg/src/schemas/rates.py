from typing import Optional

from pydantic import BaseModel, Field, model_validator

from src.core.enums import Curve, RateFamily, RateRegime
from src.exception.client_exception import InvalidArgumentError


class SRateQuery(BaseModel):
    family: RateFamily
    regime: RateRegime
    p: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    s: int = Field(1, ge=1)
    alpha: float = Field(2.0, gt=0)
    t0: Optional[int] = Field(None, ge=1, description="Change time (weak-moment rates)")

    @model_validator(mode="after")
    def validate_ranges(self) -> "SRateQuery":
        if self.family == RateFamily.SUBWEIBULL and not self.alpha <= 2:
            raise InvalidArgumentError(detail=f"subweibull rates need alpha in (0, 2], got {self.alpha}")
        if self.family == RateFamily.POLYTAIL and self.alpha < 2:
            raise InvalidArgumentError(detail=f"polytail rates need alpha >= 2, got {self.alpha}")
        if self.family == RateFamily.WEAK_MOMENT:
            if not 1 < self.alpha <= 2:
                raise InvalidArgumentError(detail=f"weak-moment rates need 1 < alpha <= 2, got {self.alpha}")
            if self.t0 is None or self.t0 >= self.n:
                raise InvalidArgumentError(detail="weak-moment rates need 1 <= t0 < n")
        if self.s > self.p:
            raise InvalidArgumentError(detail=f"s={self.s} exceeds p={self.p}")
        return self


class SPhasePoint(BaseModel):
    alpha: float
    curve_id: Curve
    value: float


class SRateValue(BaseModel):
    query: SRateQuery
    value: float


class SBoundaryQuery(BaseModel):
    family: RateFamily
    p: float = Field(..., gt=0)
    alpha: float = Field(..., gt=0)


class SRateBracket(BaseModel):
    query: SRateQuery
    lower: float
    upper: float
