from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.enums import AdversarialClaim, NoiseFamily, SignalKind
from src.exception.client_exception import InvalidArgumentError


class SNoiseSpec(BaseModel):
    family: NoiseFamily = Field(..., description="Noise distribution family")
    alpha: float = Field(..., gt=0, description="Tail or moment order")
    extra: Dict[str, Any] = Field(
        default_factory=dict,
        description="Family parameters: df, tail_index, claim, gamma, s, t0, u, c, side, layout",
    )
    seed: int = Field(0, ge=0, lt=2**64)
    scale: float = Field(1.0, ge=0, description="Multiplier applied to every draw")
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_family_alpha(self) -> "SNoiseSpec":
        family, alpha = self.family, self.alpha
        if family == NoiseFamily.SUBWEIBULL and not alpha <= 2:
            raise InvalidArgumentError(
                detail=f"subweibull requires 0 < alpha <= 2, got {alpha}"
            )
        if family in (NoiseFamily.POLYTAIL_STUDENT, NoiseFamily.POLYTAIL_PARETO):
            if alpha < 2:
                raise InvalidArgumentError(
                    detail=f"{family.value} requires alpha >= 2, got {alpha}"
                )
            if self.tail_parameter <= alpha:
                raise InvalidArgumentError(
                    detail=f"{family.value} needs a tail parameter above alpha={alpha}, "
                    f"got {self.tail_parameter}"
                )
        if family == NoiseFamily.WEAK_MOMENT_SPHERICAL:
            if not 1 < alpha <= 2:
                raise InvalidArgumentError(
                    detail=f"weak-moment-spherical requires 1 < alpha <= 2, got {alpha}"
                )
            if self.tail_parameter <= alpha:
                raise InvalidArgumentError(
                    detail=f"radial tail index must exceed alpha={alpha}"
                )
        if family == NoiseFamily.ADVERSARIAL_D:
            claim = self.extra.get("claim")
            try:
                AdversarialClaim(claim)
            except ValueError:
                raise InvalidArgumentError(
                    detail=f"adversarial-D needs extra.claim in "
                    f"{[c.value for c in AdversarialClaim]}, got {claim!r}"
                )
        return self

    @property
    def tail_parameter(self) -> float:
        # Student df, Pareto tail index or radial tail index
        if self.family == NoiseFamily.POLYTAIL_STUDENT:
            return float(self.extra.get("df", self.alpha + 0.5))
        return float(self.extra.get("tail_index", self.alpha + 0.5))


class SSignalSpec(BaseModel):
    kind: SignalKind = Field(SignalKind.NULL)
    p: int = Field(..., ge=1)
    n: int = Field(..., ge=2)
    t0: Optional[int] = Field(None, description="Change time, columns 1..t0 shifted")
    delta: Optional[List[float]] = Field(None, description="mu_1 - mu_2")
    base: Optional[List[float]] = Field(None, description="mu_2 (null mean)")
    s: Optional[int] = Field(None, ge=1, description="Sparsity bound on delta")
    taus: List[int] = Field(default_factory=list, description="Multi-change times")
    means: List[List[float]] = Field(default_factory=list, description="Segment means")
    model_config = ConfigDict(frozen=True)

    @field_validator("base", "delta", mode="after")
    @classmethod
    def finite_vectors(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(x != x or abs(x) == float("inf") for x in v):
            raise InvalidArgumentError(detail="signal vectors must be finite")
        return v

    @model_validator(mode="after")
    def validate_layout(self) -> "SSignalSpec":
        p, n = self.p, self.n
        if self.base is not None and len(self.base) != p:
            raise InvalidArgumentError(
                detail=f"base has length {len(self.base)}, expected p={p}"
            )
        if self.kind == SignalKind.SINGLE_CHANGE:
            if self.t0 is None or not 1 <= self.t0 <= n - 1:
                raise InvalidArgumentError(
                    detail=f"single-change needs 1 <= t0 <= n-1, got {self.t0}"
                )
            if self.delta is None or len(self.delta) != p:
                raise InvalidArgumentError(detail=f"single-change needs delta of length p={p}")
            support = sum(1 for x in self.delta if x != 0)
            if self.s is not None and support > self.s:
                raise InvalidArgumentError(
                    detail=f"delta has {support} nonzeros, exceeds s={self.s}"
                )
        if self.kind == SignalKind.MULTI_CHANGE:
            taus = self.taus
            if not taus or any(not 1 <= t <= n - 1 for t in taus):
                raise InvalidArgumentError(detail="multi-change times must lie in [1, n-1]")
            if any(b <= a for a, b in zip(taus, taus[1:])):
                raise InvalidArgumentError(detail="multi-change times must be strictly increasing")
            if len(self.means) != len(taus) + 1 or any(len(m) != p for m in self.means):
                raise InvalidArgumentError(
                    detail=f"multi-change needs {len(taus) + 1} segment means of length p={p}"
                )
        return self


class SMA1Spec(BaseModel):
    pi_ma: float = Field(..., description="MA(1) coefficient")
    innovation: SNoiseSpec = Field(..., description="Unit-variance white-noise law")
    seed: int = Field(0, ge=0, lt=2**64)
    model_config = ConfigDict(frozen=True)

    @field_validator("innovation", mode="after")
    @classmethod
    def unit_variance_innovation(cls, v: SNoiseSpec) -> SNoiseSpec:
        if v.family in (NoiseFamily.WEAK_MOMENT_SPHERICAL, NoiseFamily.ADVERSARIAL_D):
            raise InvalidArgumentError(
                detail=f"MA(1) innovations need a unit-variance family, got {v.family.value}"
            )
        return v

    @property
    def lag1_autocorrelation(self) -> float:
        return self.pi_ma / (1.0 + self.pi_ma**2)


class SScenarioSpec(BaseModel):
    signal: SSignalSpec
    noise: Union[SNoiseSpec, SMA1Spec]
    model_config = ConfigDict(frozen=True)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.signal.p, self.signal.n
