from typing import List

from fastapi import APIRouter, Query, status

from src.schemas.rates import SBoundaryQuery, SPhasePoint, SRateBracket, SRateQuery, SRateValue
from src.service import rates

router = APIRouter(prefix="/api/v1/rates", tags=["rates"])


@router.post("/upper", status_code=status.HTTP_200_OK)
def upper_rate(payload: SRateQuery) -> SRateValue:
    return SRateValue(query=payload, value=rates.rate_upper(payload))


@router.post("/lower", status_code=status.HTTP_200_OK)
def lower_rate(payload: SRateQuery) -> SRateValue:
    return SRateValue(query=payload, value=rates.rate_lower(payload))


@router.post("/bracket", status_code=status.HTTP_200_OK)
def bracket(payload: SRateQuery) -> SRateBracket:
    lower, upper = rates.minimax_bracket(payload)
    return SRateBracket(query=payload, lower=lower, upper=upper)


@router.post("/boundary", status_code=status.HTTP_200_OK)
def boundary(payload: SBoundaryQuery) -> float:
    return rates.sparsity_boundary(payload.family, payload.p, payload.alpha)


@router.get("/phase-curves", status_code=status.HTTP_200_OK)
def phase_curves(
    alpha_min: float = Query(2.0, gt=0),
    alpha_max: float = Query(10.0, gt=0),
    step: float = Query(0.5, gt=0),
) -> List[SPhasePoint]:
    return rates.phase_curves(rates.alpha_grid(alpha_min, alpha_max, step))
