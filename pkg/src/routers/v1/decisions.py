import logging

import numpy as np
from fastapi import APIRouter, status

from src.schemas.decision import SDecision, SDecisionRequest
from src.schemas.matrix import SDataMatrix
from src.exception.client_exception import DataError
from src.service.experiment import run_test

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/v1/decisions", tags=["decisions"])


@router.post("/", status_code=status.HTTP_200_OK)
def create_decision(payload: SDecisionRequest) -> SDecision:
    rows = {len(row) for row in payload.matrix}
    if len(rows) != 1:
        raise DataError(detail="matrix rows have different lengths")
    X = SDataMatrix(values=np.asarray(payload.matrix, dtype=float))
    cfg = payload.config
    if (X.p, X.n) != (cfg.p, cfg.n):
        raise DataError(detail=f"matrix shape {(X.p, X.n)} != config shape {(cfg.p, cfg.n)}")
    decision = run_test(X, cfg)
    logger.info(f"{cfg.test_id.value}: reject={decision.reject}", extra={"p": cfg.p, "n": cfg.n})
    return decision
