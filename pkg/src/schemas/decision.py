from typing import List, Optional

from pydantic import BaseModel, Field, computed_field

from src.core.enums import GridKind, TestId
from src.schemas.thresholds import STestConfig


class SScaleDiagnostic(BaseModel):
    t: int = Field(..., description="Scale")
    stat: float = Field(..., description="Value of the A_t-type statistic")
    threshold: float = Field(..., description="Threshold it was compared against")
    selected_count: Optional[int] = Field(None, description="Coordinates passing selection")
    ell: Optional[int] = Field(None, description="Local centre for multi-change cells")
    branch: Optional[str] = Field(None, description="dense, sparse:s, rsm, mom, rm, t1")
    s: Optional[int] = Field(None, description="Sparsity level of the branch")

    @computed_field
    @property
    def exceeded(self) -> bool:
        return self.stat > self.threshold


class SDecision(BaseModel):
    test_id: TestId
    reject: bool
    grid_kind: GridKind = GridKind.SINGLE
    diagnostics: List[SScaleDiagnostic] = Field(default_factory=list)
    branch: Optional[str] = Field(None, description="Branch taken by dispatching tests")
    dispatch_value: Optional[float] = Field(None, description="Value compared against p when dispatching")
    estimator: Optional[str] = Field(None, description="Robust mean estimator in use")
    warnings: List[str] = Field(default_factory=list)

    @property
    def fired(self) -> List[SScaleDiagnostic]:
        return [d for d in self.diagnostics if d.exceeded]

    def max_stat(self) -> float:
        return max(d.stat for d in self.diagnostics)

    def max_ratio(self) -> float:
        """Largest stat/threshold over cells; the scalarized exceedance functional."""
        ratios = []
        for d in self.diagnostics:
            if d.threshold > 0:
                ratios.append(d.stat / d.threshold)
            elif d.stat > d.threshold:
                ratios.append(float("inf"))
            else:
                ratios.append(float("-inf"))
        return max(ratios)


def decide(
    test_id: TestId,
    diagnostics: List[SScaleDiagnostic],
    grid_kind: GridKind = GridKind.SINGLE,
    **extra,
) -> SDecision:
    return SDecision(
        test_id=test_id,
        reject=any(d.exceeded for d in diagnostics),
        grid_kind=grid_kind,
        diagnostics=diagnostics,
        **extra,
    )


class SDecisionRequest(BaseModel):
    config: STestConfig
    matrix: List[List[float]] = Field(..., description="p x n data matrix, one row per coordinate")
