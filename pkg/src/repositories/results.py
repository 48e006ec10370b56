import hashlib
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Union

import pandas as pd
import ujson

from src.exception.client_exception import ConfigError
from src.schemas.decision import SDecision
from src.schemas.experiment import SCalibrationResult, SPowerCurve, SRiskEstimate
from src.schemas.manifest import SRunManifest
from src.schemas.rates import SPhasePoint

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MULTIPLIER_ID = "multiplier"


def sha256_of(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ResultRepository:
    """Output directory of one run; every CSV names the manifest on its first line."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.written: List[str] = []

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written.append(name)
        return self.out_dir / name

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._path(name)
        with open(path, "w", newline="") as handle:
            handle.write(f"# manifest={MANIFEST_NAME}\n")
            frame.to_csv(handle, index=False, float_format="%.12g", lineterminator="\n")
        logger.info(f"wrote {path}", extra={"rows": len(frame)})
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self._path(name)
        with open(path, "w") as handle:
            ujson.dump(payload, handle, indent=2)
        logger.info(f"wrote {path}")
        return path

    def write_calibration(self, result: SCalibrationResult) -> Path:
        rows = [
            {"test": result.test_id.value, "eps": result.eps, "threshold_id": key, "value": value}
            for key, value in result.thresholds.profile().items()
        ]
        if result.multiplier is not None:
            rows.append(
                {
                    "test": result.test_id.value,
                    "eps": result.eps,
                    "threshold_id": MULTIPLIER_ID,
                    "value": result.multiplier,
                }
            )
        for key in ("achieved_rate", "achieved_se", "reps"):
            rows.append(
                {"test": result.test_id.value, "eps": result.eps, "threshold_id": key, "value": getattr(result, key)}
            )
        return self.write_csv("calibration.csv", pd.DataFrame(rows))

    def write_risk(self, risk: SRiskEstimate) -> Path:
        frame = pd.DataFrame(
            [
                {
                    "type1": risk.type1,
                    "type2": risk.type2,
                    "total": risk.total,
                    "se1": risk.se1,
                    "se2": risk.se2,
                    "R": risk.reps,
                }
            ]
        )
        return self.write_csv("risk.csv", frame)

    def write_power(self, curve: SPowerCurve) -> Path:
        frame = pd.DataFrame(
            [{"rho": pt.rho, "power": pt.power, "se": pt.se, "smoothed": pt.smoothed} for pt in curve.points]
        )
        return self.write_csv("power.csv", frame)

    def write_curves(self, points: Iterable[SPhasePoint]) -> Path:
        frame = pd.DataFrame(
            [{"alpha": pt.alpha, "curve_id": pt.curve_id.value, "value": pt.value} for pt in points]
        )
        return self.write_csv("curves.csv", frame)

    def write_decision(self, decision: SDecision) -> Path:
        return self.write_json("decision.json", decision.model_dump(mode="json"))

    def write_manifest(self, manifest: SRunManifest) -> Path:
        manifest = manifest.model_copy(update={"outputs": list(self.written)})
        path = self.out_dir / MANIFEST_NAME
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as handle:
            ujson.dump(manifest.model_dump(mode="json"), handle, indent=2)
        return path


def read_multiplier(path: Union[str, Path], test_id: Optional[str] = None) -> float:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(detail=f"calibration file {path} does not exist", field="calibration")
    frame = pd.read_csv(path, comment="#")
    rows = frame[frame["threshold_id"] == MULTIPLIER_ID]
    if test_id is not None:
        rows = rows[rows["test"] == test_id]
    if rows.empty:
        raise ConfigError(
            detail=f"calibration file {path} has no multiplier for {test_id or 'any test'}",
            field="calibration",
        )
    return float(rows["value"].iloc[0])
