import math
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.enums import RobustStrategy


class SSparseCover(BaseModel):
    p: int = Field(..., ge=1)
    s: int = Field(..., ge=1)
    radius: float = 0.5
    vectors: np.ndarray = Field(..., description="N x p unit vectors, each 2s-sparse")
    supports: Tuple[Tuple[int, ...], ...] = Field(..., description="Support of each net block")
    complete: bool = Field(True, description="False when supports were sampled")
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]


class SRobustMeanContract(BaseModel):
    """Deviation bound a robust mean estimator is expected to meet with probability 1 - eta."""

    estimator: str
    eta: float = Field(..., gt=0, lt=1)
    bound_form: Literal["sparse", "weak-moment"]
    strategy: RobustStrategy = RobustStrategy.SHORTEST_INTERVAL

    def deviation_bound(
        self, p: int, n: int, s: Optional[int] = None, alpha: Optional[float] = None
    ) -> float:
        tail = math.log(1 / self.eta) / n
        if self.bound_form == "sparse":
            s = s or p
            return math.sqrt(s * math.log(math.e * p / s) / n) + math.sqrt(tail)
        power = (alpha - 1) / alpha if alpha else 0.5
        return math.sqrt(p / n) + (p / n) ** power + tail**power


class SRsmFit(BaseModel):
    mu: np.ndarray
    objective: float
    support: Tuple[int, ...]
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
