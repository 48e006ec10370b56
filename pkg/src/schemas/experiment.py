from typing import List, Optional, Union

from pydantic import BaseModel, Field, computed_field, model_validator

from src.core.enums import TestId
from src.exception.client_exception import ConfigError, InvalidArgumentError
from src.schemas.scenario import SMA1Spec, SNoiseSpec, SSignalSpec
from src.schemas.thresholds import STestConfig, Thresholds


class SCalibrationResult(BaseModel):
    test_id: TestId
    noise: Union[SNoiseSpec, SMA1Spec]
    p: int
    n: int
    eps: float
    thresholds: Thresholds
    reps: int = Field(..., ge=1)
    seed: int
    multiplier: Optional[float] = Field(None, description="Scale applied to the theory profile")
    achieved_rate: float = Field(..., ge=0, le=1, description="In-sample null rejection rate")
    achieved_se: float = Field(..., ge=0)


class SRiskEstimate(BaseModel):
    type1: float = Field(..., ge=0, le=1)
    type2: float = Field(..., ge=0, le=1)
    se1: float = Field(..., ge=0)
    se2: float = Field(..., ge=0)
    reps: int = Field(..., ge=1)

    @computed_field
    @property
    def total(self) -> float:
        return self.type1 + self.type2


class SPowerPoint(BaseModel):
    rho: float = Field(..., ge=0)
    power: float = Field(..., ge=0, le=1)
    se: float = Field(..., ge=0)
    smoothed: Optional[float] = Field(None, description="Isotonic fit of the power curve")


class SPowerCurve(BaseModel):
    test_id: TestId
    beta: float = Field(0.9, gt=0, lt=1)
    reps: int
    points: List[SPowerPoint]

    @model_validator(mode="after")
    def increasing_grid(self) -> "SPowerCurve":
        rhos = [pt.rho for pt in self.points]
        if any(b <= a for a, b in zip(rhos, rhos[1:])):
            raise InvalidArgumentError(detail="rho grid must be increasing")
        return self

    @computed_field
    @property
    def rho_star(self) -> Optional[float]:
        for pt in self.points:
            if pt.power >= self.beta:
                return pt.rho
        return None


class SExperimentSpec(BaseModel):
    seed: int = Field(0, ge=0, lt=2**64)
    reps: Optional[int] = Field(None, ge=1)
    threads: Optional[int] = Field(None, ge=1)
    data: Optional[str] = Field(None, description="Matrix CSV for the test command")
    calibration: Optional[str] = Field(None, description="Calibration CSV supplying the multiplier")
    multiplier: Optional[float] = Field(None, description="Scale applied to theory thresholds")


class SPowerSpec(BaseModel):
    t0: int = Field(..., ge=1)
    rho: List[float] = Field(..., min_length=1, description="Increasing rho grid")
    s: Optional[int] = Field(None, ge=1, description="Support size of the change direction")
    direction: Optional[List[float]] = None
    beta: float = Field(0.9, gt=0, lt=1)


class SRunConfig(BaseModel):
    test: STestConfig
    noise: Optional[Union[SNoiseSpec, SMA1Spec]] = None
    signal: Optional[SSignalSpec] = None
    experiment: SExperimentSpec = Field(default_factory=SExperimentSpec)
    power: Optional[SPowerSpec] = None
    history: Optional[str] = Field(None, description="CSV used to estimate the lag-1 autocorrelation")

    def require_noise(self) -> Union[SNoiseSpec, SMA1Spec]:
        if self.noise is None:
            raise ConfigError(detail="config needs a [NoiseSpec] section", field="NoiseSpec")
        return self.noise
