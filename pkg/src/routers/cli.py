"""Command-line front end.

Subcommands calibrate, test, risk, power, phase-diagram and serve. Every
run writes its outputs plus manifest.json into --out; all randomness flows
from the single run seed.
"""

import argparse
import logging
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Callable, Dict, List, Optional

import uvicorn
from pydantic import ValidationError

from src.core.config import get_settings
from src.core.config_logging import setup_logging
from src.core.enums import SignalKind, TestId
from src.exception.base import BaseCPTException
from src.exception.client_exception import ConfigError
from src.exception.exception_handlers import EXIT_OK, exit_code_for
from src.repositories.matrix import MatrixRepository
from src.repositories.results import ResultRepository, read_multiplier, sha256_of
from src.repositories.scenario import ScenarioRepository
from src.schemas.manifest import SRunManifest
from src.schemas.scenario import SScenarioSpec, SSignalSpec
from src.schemas.experiment import SRunConfig
from src.schemas.thresholds import SSecondMomentModel, Thresholds
from src.service import experiment, mom, rates

logger = logging.getLogger(__name__)

PACKAGE = "heavytail-cpt"


def tool_version() -> str:
    try:
        return version(PACKAGE)
    except PackageNotFoundError:
        return "0.0.0+local"


class Run:
    """Bookkeeping shared by every subcommand: config, seed, outputs, manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.started = time.perf_counter()
        self.inputs: Dict[str, str] = {}
        self.results = ResultRepository(args.out)
        self.config: Optional[SRunConfig] = None
        if getattr(args, "config", None):
            self.config = ScenarioRepository(args.config).load()
            self.track(args.config)

    def track(self, path: str) -> None:
        self.inputs[str(path)] = sha256_of(path)

    @property
    def seed(self) -> int:
        if self.args.seed is not None:
            return self.args.seed
        return self.config.experiment.seed if self.config else 0

    @property
    def reps(self) -> Optional[int]:
        if self.args.reps is not None:
            return self.args.reps
        return self.config.experiment.reps if self.config else None

    @property
    def threads(self) -> Optional[int]:
        return self.config.experiment.threads if self.config else None

    def finish(self) -> Path:
        manifest = SRunManifest(
            command=self.command,
            config_path=getattr(self.args, "config", None),
            seed=self.seed,
            output_dir=str(self.args.out),
            tool_version=tool_version(),
            wall_clock_seconds=time.perf_counter() - self.started,
            input_hashes=self.inputs,
        )
        return self.results.write_manifest(manifest)


def _require_config(run: Run) -> SRunConfig:
    if run.config is None:
        raise ConfigError(detail=f"{run.command} needs --config", field="config")
    return run.config


def _with_history(run: Run, config: SRunConfig) -> SRunConfig:
    if config.history is None or config.test.test_id != TestId.TEMPORAL:
        return config
    history = MatrixRepository(config.history).read(p=config.test.p)
    run.track(config.history)
    r1 = mom.estimate_lag1(history)
    logger.info(f"lag-1 autocorrelation from {config.history}: {r1:.4f}")
    test = config.test.model_copy(update={"second_moment": SSecondMomentModel(r1=r1)})
    return config.model_copy(update={"test": test})


def _thresholds(run: Run, config: SRunConfig) -> Optional[Thresholds]:
    source = getattr(run.args, "calibration", None) or config.experiment.calibration
    multiplier = config.experiment.multiplier
    if source:
        run.track(source)
        multiplier = read_multiplier(source, config.test.test_id.value)
    if multiplier is None:
        return config.test.thresholds
    return experiment.theory_thresholds(config.test).scaled(multiplier)


def cmd_calibrate(run: Run) -> None:
    config = _with_history(run, _require_config(run))
    result = experiment.calibrate(
        config.test, config.require_noise(), run.reps, run.seed, run.threads
    )
    run.results.write_calibration(result)


def cmd_test(run: Run) -> None:
    config = _with_history(run, _require_config(run))
    data = run.args.data or config.experiment.data
    if not data:
        raise ConfigError(detail="test needs a matrix CSV (--data or [Experiment] data)", field="data")
    X = MatrixRepository(data).read(p=config.test.p, n=config.test.n)
    run.track(data)
    decision = experiment.run_test(X, config.test, _thresholds(run, config))
    logger.info(f"{decision.test_id.value}: reject={decision.reject}")
    run.results.write_decision(decision)


def _calibrated_runner(run: Run, config: SRunConfig) -> experiment.Runner:
    thresholds = _thresholds(run, config)
    if thresholds is None:
        result = experiment.calibrate(
            config.test, config.require_noise(), None, run.seed, run.threads
        )
        run.results.write_calibration(result)
        thresholds = result.thresholds
    return experiment.make_runner(config.test, thresholds)


def cmd_risk(run: Run) -> None:
    config = _with_history(run, _require_config(run))
    if config.signal is None or config.signal.kind == SignalKind.NULL:
        raise ConfigError(detail="risk needs an alternative [SignalSpec]", field="SignalSpec")
    noise = config.require_noise()
    null = SScenarioSpec(signal=SSignalSpec(p=config.signal.p, n=config.signal.n), noise=noise)
    alt = SScenarioSpec(signal=config.signal, noise=noise)
    risk = experiment.estimate_risk(
        _calibrated_runner(run, config), null, alt, run.reps, run.seed, run.threads
    )
    run.results.write_risk(risk)


def cmd_power(run: Run) -> None:
    config = _with_history(run, _require_config(run))
    if config.power is None:
        raise ConfigError(detail="power needs a [Power] section", field="Power")
    spec = config.power
    curve = experiment.power_curve(
        _calibrated_runner(run, config),
        config.test.test_id,
        config.require_noise(),
        config.test.p,
        config.test.n,
        spec.t0,
        spec.rho,
        s=spec.s,
        direction=spec.direction,
        reps=run.reps,
        seed=run.seed,
        beta=spec.beta,
        threads=run.threads,
    )
    logger.info(f"power curve: rho*({spec.beta}) = {curve.rho_star}")
    run.results.write_power(curve)


def cmd_phase_diagram(run: Run) -> None:
    grid = rates.alpha_grid(run.args.alpha_min, run.args.alpha_max, run.args.step)
    run.results.write_curves(rates.phase_curves(grid))


def cmd_serve(args: argparse.Namespace) -> None:
    settings = get_settings()
    uvicorn.run(
        "src.application:get_app",
        host=args.host or settings.host,
        port=args.port or settings.port,
        factory=True,
    )


COMMANDS: Dict[str, Callable[[Run], None]] = {
    "calibrate": cmd_calibrate,
    "test": cmd_test,
    "risk": cmd_risk,
    "power": cmd_power,
    "phase-diagram": cmd_phase_diagram,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PACKAGE, description="Mean change-point tests under heavy-tailed noise."
    )
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_parser(name: str, help_text: str, config: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if config:
            p.add_argument("--config", required=True, help="Scenario INI file")
        p.add_argument("--out", default=".", help="Output directory")
        p.add_argument("--seed", type=int, default=None, help="Run seed (u64)")
        p.add_argument("--reps", type=int, default=None, help="Monte Carlo replicates")
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
        return p

    run_parser("calibrate", "Calibrate thresholds under the configured null")
    test = run_parser("test", "Run a test on a matrix CSV")
    test.add_argument("--data", default=None, help="p x n matrix CSV")
    test.add_argument("--calibration", default=None, help="calibration.csv with a multiplier")
    for name, help_text in (("risk", "Estimate Type I/II risk"), ("power", "Power curve over a rho grid")):
        p = run_parser(name, help_text)
        p.add_argument("--calibration", default=None, help="calibration.csv with a multiplier")
    phase = run_parser("phase-diagram", "Export the gamma/beta phase curves", config=False)
    phase.add_argument("--alpha-min", type=float, default=2.0)
    phase.add_argument("--alpha-max", type=float, default=10.0)
    phase.add_argument("--step", type=float, default=0.5)

    serve = sub.add_parser("serve", help="Run the HTTP API")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(settings.log_level, quiet=args.quiet, log_file=settings.log_file)
    try:
        if args.command == "serve":
            cmd_serve(args)
            return EXIT_OK
        run = Run(args.command, args)
        COMMANDS[args.command](run)
        run.finish()
    except BaseCPTException as exc:
        logger.error(f"{exc.error_code}: {exc.message}", extra=exc.context)
        return exit_code_for(exc)
    except ValidationError as exc:
        logger.error(f"config_error: {exc}")
        return exit_code_for(exc)
    except Exception as exc:
        logger.error(f"unexpected failure: {exc}", exc_info=True)
        return exit_code_for(exc)
    return EXIT_OK


def run() -> None:
    sys.exit(main())
