from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.enums import (
    Provenance,
    RobustStrategy,
    RsmMode,
    SecondMomentKind,
    TestId,
)
from src.exception.client_exception import InvalidArgumentError


class SConstants(BaseModel):
    """Tuning constants C1..C7; their values are left free and default to 1."""

    C1: float = Field(1.0, gt=0)
    C2: float = Field(1.0, gt=0)
    C3: float = Field(1.0, gt=0)
    C4: float = Field(1.0, gt=0)
    C5: float = Field(1.0, gt=0)
    C6: float = Field(1.0, gt=0)
    C7: float = Field(1.0, gt=0)
    model_config = ConfigDict(frozen=True)


class SGroupingPlan(BaseModel):
    t: int = Field(..., ge=1)
    G: int = Field(..., ge=1)
    group_size: int = Field(..., ge=1)


class SSubweibullThresholds(BaseModel):
    kind: Literal["subweibull"] = "subweibull"
    r: float = Field(..., description="Max-scale threshold")
    r1: float = Field(0.0, description="t=1 sparse threshold")
    a: float = Field(0.0, ge=0, description="Selection threshold")
    provenance: Provenance = Provenance.THEORY
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def nonnegative_theory(self) -> "SSubweibullThresholds":
        if self.provenance == Provenance.THEORY and (self.r < 0 or self.r1 < 0):
            raise InvalidArgumentError(detail="theory thresholds r, r1 must be >= 0")
        return self

    def scaled(self, c: float) -> "SSubweibullThresholds":
        return self.model_copy(
            update={"r": self.r * c, "r1": self.r1 * c, "provenance": Provenance.CALIBRATED}
        )

    def profile(self) -> Dict[str, float]:
        return {"r": self.r, "r1": self.r1, "a": self.a}


class SMomThresholds(BaseModel):
    kind: Literal["mom"] = "mom"
    r_t: Dict[int, float] = Field(default_factory=dict, description="Per-scale thresholds")
    groups: Dict[int, int] = Field(default_factory=dict, description="Scale -> G_t")
    r: Optional[float] = Field(None, description="Single threshold shared across cells")
    a: Optional[float] = Field(None, ge=0, description="Selection threshold")
    a_res: Optional[float] = Field(None, ge=0)
    g_res: Optional[int] = Field(None, ge=1)
    provenance: Provenance = Provenance.THEORY
    model_config = ConfigDict(frozen=True)

    @field_validator("groups", mode="after")
    @classmethod
    def powers_of_two(cls, v: Dict[int, int]) -> Dict[int, int]:
        for t, g in v.items():
            if g < 1 or g & (g - 1):
                raise InvalidArgumentError(detail=f"group count {g} at t={t} is not a power of two")
        return v

    def plan(self, t: int) -> SGroupingPlan:
        if t not in self.groups:
            raise InvalidArgumentError(detail=f"no grouping plan for scale t={t}")
        G = self.groups[t]
        return SGroupingPlan(t=t, G=G, group_size=max(t // G, 1))

    def threshold(self, t: int) -> float:
        if self.r is not None:
            return self.r
        if t not in self.r_t:
            raise InvalidArgumentError(detail=f"no threshold for scale t={t}")
        return self.r_t[t]

    def scaled(self, c: float) -> "SMomThresholds":
        return self.model_copy(
            update={
                "r_t": {t: v * c for t, v in self.r_t.items()},
                "r": None if self.r is None else self.r * c,
                "provenance": Provenance.CALIBRATED,
            }
        )

    def profile(self) -> Dict[str, float]:
        out = {f"r_t[{t}]": v for t, v in sorted(self.r_t.items())}
        if self.r is not None:
            out["r"] = self.r
        for name in ("a", "a_res"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out


class SRegimeSchedule(BaseModel):
    delta1: float = Field(..., gt=0, description="Small-scale cutoff")
    delta2: float = Field(..., gt=0, description="Saturation cutoff")
    eta: Dict[int, float] = Field(default_factory=dict, description="Per-scale failure probability")
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def ordered(self) -> "SRegimeSchedule":
        if self.delta1 > self.delta2:
            raise InvalidArgumentError(detail="schedule needs delta1 <= delta2")
        for t, e in self.eta.items():
            if not 0 < e < 1:
                raise InvalidArgumentError(detail=f"eta at t={t} must lie in (0, 1), got {e}")
        return self


class SRobustThresholds(BaseModel):
    kind: Literal["robust"] = "robust"
    a: float = Field(0.0, ge=0, description="Selection threshold of the small-scale statistic")
    r_small: Dict[int, float] = Field(default_factory=dict, description="t <= delta1")
    r_robust: Dict[int, float] = Field(default_factory=dict, description="t > delta1")
    schedule: SRegimeSchedule
    estimator: str = Field("rsm", description="rsm or geo-mom")
    provenance: Provenance = Provenance.THEORY
    model_config = ConfigDict(frozen=True)

    def scaled(self, c: float) -> "SRobustThresholds":
        return self.model_copy(
            update={
                "r_small": {t: v * c for t, v in self.r_small.items()},
                "r_robust": {t: v * c for t, v in self.r_robust.items()},
                "provenance": Provenance.CALIBRATED,
            }
        )

    def profile(self) -> Dict[str, float]:
        out = {f"r_small[{t}]": v for t, v in sorted(self.r_small.items())}
        out.update({f"r_robust[{t}]": v for t, v in sorted(self.r_robust.items())})
        out["a"] = self.a
        return out


class SCombinedThresholds(BaseModel):
    kind: Literal["combined"] = "combined"
    dense: SSubweibullThresholds
    sparse: SSubweibullThresholds
    provenance: Provenance = Provenance.THEORY
    model_config = ConfigDict(frozen=True)

    def scaled(self, c: float) -> "SCombinedThresholds":
        return self.model_copy(
            update={
                "dense": self.dense.scaled(c),
                "sparse": self.sparse.scaled(c),
                "provenance": Provenance.CALIBRATED,
            }
        )

    def profile(self) -> Dict[str, float]:
        out = {f"dense.{k}": v for k, v in self.dense.profile().items()}
        out.update({f"sparse.{k}": v for k, v in self.sparse.profile().items()})
        return out


class SAdaptiveThresholds(BaseModel):
    kind: Literal["adaptive"] = "adaptive"
    dense: SMomThresholds
    sparse: Dict[int, Annotated[Union[SMomThresholds, SRobustThresholds], Field(discriminator="kind")]]
    provenance: Provenance = Provenance.THEORY
    model_config = ConfigDict(frozen=True)

    def scaled(self, c: float) -> "SAdaptiveThresholds":
        return self.model_copy(
            update={
                "dense": self.dense.scaled(c),
                "sparse": {s: thr.scaled(c) for s, thr in self.sparse.items()},
                "provenance": Provenance.CALIBRATED,
            }
        )

    def profile(self) -> Dict[str, float]:
        out = {f"dense.{k}": v for k, v in self.dense.profile().items()}
        for s, thr in sorted(self.sparse.items()):
            out.update({f"sparse:{s}.{k}": v for k, v in thr.profile().items()})
        return out


Thresholds = Annotated[
    Union[
        SSubweibullThresholds,
        SMomThresholds,
        SRobustThresholds,
        SCombinedThresholds,
        SAdaptiveThresholds,
    ],
    Field(discriminator="kind"),
]


class SSecondMomentModel(BaseModel):
    kind: SecondMomentKind = SecondMomentKind.MA1_PLUGIN
    known: Dict[int, Union[float, List[float], List[List[float]]]] = Field(
        default_factory=dict,
        description="Scale -> E Zbar^2 (scalar, per group, or p x G)",
    )
    r1: Optional[float] = Field(None, description="Lag-1 autocorrelation plug-in")

    @model_validator(mode="after")
    def payload_present(self) -> "SSecondMomentModel":
        if self.kind == SecondMomentKind.KNOWN and not self.known:
            raise InvalidArgumentError(detail="known second-moment model needs values")
        return self


SPARSE_TESTS = {
    TestId.SPARSE_G,
    TestId.GAUSSIAN_COMBINED,
    TestId.SPARSE_P_MOM,
    TestId.SPARSE_P_RSM,
    TestId.SPARSE_P_COMBINED,
    TestId.RESTRICTED_P,
    TestId.RESTRICTED_G,
}


class STestConfig(BaseModel):
    test_id: TestId
    p: int = Field(..., ge=1)
    n: int = Field(..., ge=2)
    alpha: float = Field(2.0, gt=0, description="Tail or moment order assumed by the test")
    s: Optional[int] = Field(None, ge=1, description="Sparsity")
    eps: float = Field(0.1, gt=0, lt=1, description="Target level")
    t_res: Optional[float] = Field(None, ge=1, description="Boundary restriction")
    constants: SConstants = Field(default_factory=SConstants)
    rsm_mode: RsmMode = RsmMode.SUBGRADIENT
    robust_strategy: RobustStrategy = RobustStrategy.SHORTEST_INTERVAL
    second_moment: Optional[SSecondMomentModel] = None
    delta: Optional[int] = Field(None, ge=1, description="Override of the grouping cap")
    thresholds: Optional[Thresholds] = Field(None, description="Calibrated or user thresholds")

    __test__ = False

    @model_validator(mode="after")
    def validate_sparsity(self) -> "STestConfig":
        if self.test_id in SPARSE_TESTS and self.s is None:
            raise InvalidArgumentError(
                detail=f"test {self.test_id.value} needs the sparsity s", field="s"
            )
        if self.s is not None and self.s > self.p:
            raise InvalidArgumentError(
                detail=f"sparsity s={self.s} exceeds p={self.p}", field="s"
            )
        if self.test_id == TestId.WEAK_MOMENT and not 1 < self.alpha <= 2:
            raise InvalidArgumentError(
                detail=f"weak-moment test needs 1 < alpha <= 2, got {self.alpha}",
                field="alpha",
            )
        if self.delta is not None and self.delta & (self.delta - 1):
            raise InvalidArgumentError(detail="delta must be a power of two", field="delta")
        return self
