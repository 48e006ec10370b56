import configparser
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from src.exception.client_exception import ConfigError
from src.schemas.exception import ErrorDetail
from src.schemas.experiment import SExperimentSpec, SPowerSpec, SRunConfig
from src.schemas.scenario import SMA1Spec, SNoiseSpec, SSignalSpec
from src.schemas.thresholds import SConstants, SSecondMomentModel, STestConfig

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)

NOISE_FIELDS = {"family", "alpha", "seed", "scale"}
LIST_FIELDS = {"delta", "base", "taus", "rho", "direction"}


def _scalar(text: str) -> Any:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _split(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build(model: Type[M], data: Dict[str, Any], section: str) -> M:
    """Validate one config section, turning pydantic errors into ConfigError."""
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        details = [
            ErrorDetail(
                field=f"{section}.{'.'.join(str(loc) for loc in err['loc'])}",
                message=err["msg"],
                error_code=err["type"],
            )
            for err in exc.errors()
        ]
        first = details[0]
        raise ConfigError(
            detail=f"invalid value for {first.field}: {first.message}",
            field=first.field,
            details=details,
        )


class ScenarioRepository:
    """INI scenario files with one section per schema type."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        self.parser.optionxform = str

    def _load(self) -> None:
        if not self.path.is_file():
            raise ConfigError(detail=f"config file {self.path} does not exist", field="config")
        try:
            self.parser.read(self.path)
        except configparser.Error as exc:
            raise ConfigError(detail=f"cannot parse {self.path}: {exc}", field="config")

    def section(self, name: str) -> Optional[Dict[str, Any]]:
        if not self.parser.has_section(name):
            return None
        out: Dict[str, Any] = {}
        for key, raw in self.parser.items(name):
            if key in LIST_FIELDS:
                out[key] = [_scalar(v) for v in _split(raw)]
            elif key == "means":
                out[key] = [[_scalar(v) for v in _split(row)] for row in raw.split(";") if row.strip()]
            else:
                out[key] = raw.strip()
        return out

    def _noise(self) -> Optional[SNoiseSpec]:
        raw = self.section("NoiseSpec")
        if raw is None:
            return None
        data = {k: v for k, v in raw.items() if k in NOISE_FIELDS}
        data["extra"] = {k: _scalar(v) for k, v in raw.items() if k not in NOISE_FIELDS}
        return build(SNoiseSpec, data, "NoiseSpec")

    def _test_config(self) -> STestConfig:
        raw = self.section("TestConfig")
        if raw is None:
            raise ConfigError(detail="config has no [TestConfig] section", field="TestConfig")
        constants = self.section("Constants")
        if constants is not None:
            raw["constants"] = build(SConstants, constants, "Constants")
        second = self.section("SecondMomentModel")
        if second is not None:
            second.pop("history", None)
            raw["second_moment"] = build(SSecondMomentModel, second, "SecondMomentModel")
        return build(STestConfig, raw, "TestConfig")

    def load(self) -> SRunConfig:
        self._load()
        test = self._test_config()
        noise = self._noise()
        ma1 = self.section("MA1Spec")
        if ma1 is not None:
            if noise is None:
                raise ConfigError(detail="[MA1Spec] needs a [NoiseSpec] innovation", field="NoiseSpec")
            noise = build(SMA1Spec, {**ma1, "innovation": noise}, "MA1Spec")
        signal = self.section("SignalSpec")
        second = self.section("SecondMomentModel") or {}
        experiment = self.section("Experiment") or {}
        power = self.section("Power")
        config = build(
            SRunConfig,
            {
                "test": test,
                "noise": noise,
                "signal": None if signal is None else build(SSignalSpec, signal, "SignalSpec"),
                "experiment": build(SExperimentSpec, experiment, "Experiment"),
                "power": None if power is None else build(SPowerSpec, power, "Power"),
                "history": second.get("history"),
            },
            "config",
        )
        logger.debug(f"loaded scenario {self.path}: test={config.test.test_id.value}")
        return config
