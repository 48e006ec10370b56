"""Monte Carlo calibration, risk and power estimation.

Every test id has a theory threshold builder and a runner. Replicate r of a
run with seed S draws from make_rng(S, r, purpose), so results depend only
on (spec, seed, R) and never on the thread count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy.optimize import isotonic_regression

from src.core.config import get_settings
from src.core.enums import Provenance, SecondMomentKind, TestId
from src.exception.client_exception import InvalidArgumentError
from src.exception.server_exception import CalibrationFailureError
from src.schemas.decision import SDecision
from src.schemas.experiment import SCalibrationResult, SPowerCurve, SPowerPoint, SRiskEstimate
from src.schemas.matrix import SDataMatrix
from src.schemas.scenario import SMA1Spec, SNoiseSpec, SScenarioSpec, SSignalSpec
from src.schemas.thresholds import (
    SCombinedThresholds,
    SMomThresholds,
    SRobustThresholds,
    SSecondMomentModel,
    SSubweibullThresholds,
    STestConfig,
    Thresholds,
)
from src.service import advanced, mom, subweibull
from src.service.core_model import MatrixLike
from src.service.generators import alternative_for_rho, gen_dataset, make_rng
from src.service.robust_mean import sparse_cover

logger = logging.getLogger(__name__)

T = TypeVar("T")
Runner = Callable[[MatrixLike], SDecision]
NullLaw = Union[SNoiseSpec, SMA1Spec]

MIN_CALIBRATION_REPS = 200
SINGLE_THRESHOLD_TESTS = {TestId.DENSE_G, TestId.MULTI, TestId.RESTRICTED_G}


def theory_thresholds(cfg: STestConfig) -> Thresholds:
    p, n, s, c = cfg.p, cfg.n, cfg.s, cfg.constants
    test_id = cfg.test_id
    if test_id in (TestId.DENSE_G, TestId.SPARSE_G):
        return subweibull.subweibull_thresholds(test_id, p, n, s, cfg.alpha, c)
    if test_id == TestId.GAUSSIAN_COMBINED:
        return SCombinedThresholds(
            dense=subweibull.subweibull_thresholds(TestId.DENSE_G, p, n, s, cfg.alpha, c),
            sparse=subweibull.subweibull_thresholds(TestId.SPARSE_G, p, n, s, cfg.alpha, c),
        )
    if test_id in (
        TestId.DENSE_P,
        TestId.TEMPORAL,
        TestId.MULTI,
        TestId.SPARSE_P_MOM,
        TestId.RESTRICTED_P,
        TestId.RESTRICTED_G,
    ):
        return mom.mom_thresholds(test_id, p, n, s, cfg.alpha, c, cfg.t_res, cfg.delta)
    if test_id == TestId.SPARSE_P_RSM:
        return advanced.rsm_thresholds(p, n, s, cfg.alpha, cfg.eps, c)
    if test_id == TestId.SPARSE_P_COMBINED:
        branch, _ = advanced.combined_branch(p, n, cfg.alpha)
        if branch == "rsm":
            return advanced.rsm_thresholds(p, n, s, cfg.alpha, cfg.eps, c)
        return mom.mom_thresholds(TestId.SPARSE_P_MOM, p, n, s, cfg.alpha, c, delta=cfg.delta)
    if test_id == TestId.ADAPTIVE:
        return advanced.adaptive_thresholds(p, n, cfg.alpha, cfg.eps, c)
    return advanced.weakmoment_thresholds(p, n, cfg.alpha, cfg.eps, c)


def _expect(thr: Thresholds, kind: type, test_id: TestId) -> Thresholds:
    if not isinstance(thr, kind):
        raise InvalidArgumentError(
            detail=f"test {test_id.value} needs {kind.__name__} thresholds, got {type(thr).__name__}",
            field="thresholds",
        )
    return thr


def _second_moment(X: MatrixLike, cfg: STestConfig) -> SSecondMomentModel:
    model = cfg.second_moment
    if model is None or (model.kind == SecondMomentKind.MA1_PLUGIN and model.r1 is None):
        r1 = mom.estimate_lag1(X)
        logger.debug(f"temporal test: lag-1 autocorrelation estimated in-sample as {r1:.4f}")
        return SSecondMomentModel(kind=SecondMomentKind.MA1_PLUGIN, r1=r1)
    return model


def run_test(X: MatrixLike, cfg: STestConfig, thr: Optional[Thresholds] = None) -> SDecision:
    thr = thr or cfg.thresholds or theory_thresholds(cfg)
    test_id, s = cfg.test_id, cfg.s
    rsm_options = {"mode": cfg.rsm_mode, "strategy": cfg.robust_strategy}
    if test_id == TestId.DENSE_G:
        return subweibull.test_dense_G(X, _expect(thr, SSubweibullThresholds, test_id))
    if test_id == TestId.SPARSE_G:
        return subweibull.test_sparse_G(X, s, _expect(thr, SSubweibullThresholds, test_id))
    if test_id == TestId.GAUSSIAN_COMBINED:
        return subweibull.test_gaussian_combined(X, s, _expect(thr, SCombinedThresholds, test_id))
    if test_id == TestId.DENSE_P:
        return mom.test_dense_P(X, _expect(thr, SMomThresholds, test_id))
    if test_id == TestId.SPARSE_P_MOM:
        return mom.test_sparse_P_mom(X, s, _expect(thr, SMomThresholds, test_id))
    if test_id == TestId.MULTI:
        return mom.test_multi(X, _expect(thr, SMomThresholds, test_id))
    if test_id == TestId.TEMPORAL:
        return mom.test_temporal(X, _expect(thr, SMomThresholds, test_id), _second_moment(X, cfg))
    if test_id in (TestId.RESTRICTED_P, TestId.RESTRICTED_G):
        t_res = mom.resolve_t_res(cfg.p, cfg.n, s, cfg.t_res)
        runner = mom.test_restricted_P if test_id == TestId.RESTRICTED_P else mom.test_restricted_G
        return runner(X, s, t_res, _expect(thr, SMomThresholds, test_id))
    if test_id == TestId.SPARSE_P_RSM:
        return advanced.test_sparse_P_rsm(
            X, s, _expect(thr, SRobustThresholds, test_id), **rsm_options
        )
    if test_id == TestId.SPARSE_P_COMBINED:
        return advanced.test_sparse_P_combined(X, s, thr, cfg.alpha, **rsm_options)
    if test_id == TestId.ADAPTIVE:
        return advanced.test_adaptive(X, thr, cfg.alpha, **rsm_options)
    return advanced.test_weakmoment(X, _expect(thr, SRobustThresholds, test_id))


def make_runner(cfg: STestConfig, thr: Optional[Thresholds] = None) -> Runner:
    thr = thr or cfg.thresholds or theory_thresholds(cfg)
    if cfg.test_id in (TestId.SPARSE_P_RSM, TestId.SPARSE_P_COMBINED) and isinstance(
        thr, SRobustThresholds
    ):
        # warm the cover cache once instead of inside every replicate
        sparse_cover(cfg.p, cfg.s)
    return partial(run_test, cfg=cfg, thr=thr)


def map_replicates(fn: Callable[[int], T], reps: int, threads: Optional[int] = None) -> List[T]:
    cap = get_settings().threads
    workers = min(threads or cap, cap)
    if workers <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def _rate(flags: Sequence[bool]) -> Tuple[float, float]:
    reps = len(flags)
    rate = float(np.mean(flags))
    return rate, math.sqrt(rate * (1 - rate) / reps)


def _null_dataset(noise: NullLaw, p: int, n: int, seed: int, replicate: int) -> SDataMatrix:
    signal = SSignalSpec(p=p, n=n)
    return gen_dataset(signal, noise, rng=make_rng(seed, replicate, "calibrate"))


def order_statistic(values: Sequence[float], eps: float) -> float:
    """The ceil((1 - eps) R)-th smallest value."""
    ordered = np.sort(np.asarray(values, dtype=float))
    k = math.ceil((1 - eps) * ordered.size)
    return float(ordered[max(k, 1) - 1])


def calibrate(
    cfg: STestConfig,
    noise: NullLaw,
    reps: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> SCalibrationResult:
    reps = reps or get_settings().calibration_reps
    if reps < MIN_CALIBRATION_REPS:
        raise InvalidArgumentError(
            detail=f"calibration needs at least {MIN_CALIBRATION_REPS} replicates, got {reps}",
            field="reps",
        )
    theory = theory_thresholds(cfg)
    runner = make_runner(cfg, theory)
    single = cfg.test_id in SINGLE_THRESHOLD_TESTS

    def replicate(r: int) -> float:
        decision = runner(_null_dataset(noise, cfg.p, cfg.n, seed, r))
        return decision.max_stat() if single else decision.max_ratio()

    logger.info(
        f"calibrating {cfg.test_id.value} at eps={cfg.eps} with R={reps}",
        extra={"p": cfg.p, "n": cfg.n, "seed": seed},
    )
    values = np.asarray(map_replicates(replicate, reps, threads))
    if not np.all(np.isfinite(values)):
        raise CalibrationFailureError(
            detail=f"{cfg.test_id.value}: exceedance functional is not finite under the null"
        )
    if np.ptp(values) == 0:
        raise CalibrationFailureError(
            detail=f"{cfg.test_id.value}: null statistic is degenerate (all {reps} values equal)"
        )
    cut = order_statistic(values, cfg.eps)
    if single:
        base = theory.r
        thresholds = theory.model_copy(update={"r": cut, "provenance": Provenance.CALIBRATED})
        multiplier = cut / base if base else None
    else:
        thresholds, multiplier = theory.scaled(cut), cut
    rate, se = _rate(values > cut)
    logger.info(f"calibrated {cfg.test_id.value}: multiplier={multiplier}, in-sample rate={rate:.4f}")
    return SCalibrationResult(
        test_id=cfg.test_id,
        noise=noise,
        p=cfg.p,
        n=cfg.n,
        eps=cfg.eps,
        thresholds=thresholds,
        reps=reps,
        seed=seed,
        multiplier=multiplier,
        achieved_rate=rate,
        achieved_se=se,
    )


def rejection_rate(
    runner: Runner,
    scenario: SScenarioSpec,
    reps: int,
    seed: int,
    purpose: str,
    threads: Optional[int] = None,
) -> Tuple[float, float]:
    def replicate(r: int) -> bool:
        X = gen_dataset(scenario.signal, scenario.noise, rng=make_rng(seed, r, purpose))
        return runner(X).reject

    return _rate(map_replicates(replicate, reps, threads))


def estimate_risk(
    runner: Runner,
    null: SScenarioSpec,
    alt: SScenarioSpec,
    reps: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> SRiskEstimate:
    if null.shape != alt.shape:
        raise InvalidArgumentError(
            detail=f"null shape {null.shape} and alternative shape {alt.shape} differ"
        )
    reps = reps or get_settings().risk_reps
    type1, se1 = rejection_rate(runner, null, reps, seed, "null", threads)
    power, se2 = rejection_rate(runner, alt, reps, seed, "alternative", threads)
    return SRiskEstimate(type1=type1, type2=1 - power, se1=se1, se2=se2, reps=reps)


def isotonic_smooth(values: Sequence[float], weights: Optional[Sequence[float]] = None) -> np.ndarray:
    return isotonic_regression(np.asarray(values, dtype=float), weights=weights, increasing=True).x


def power_curve(
    runner: Runner,
    test_id: TestId,
    noise: NullLaw,
    p: int,
    n: int,
    t0: int,
    rho_grid: Sequence[float],
    s: Optional[int] = None,
    direction: Optional[np.ndarray] = None,
    reps: Optional[int] = None,
    seed: int = 0,
    beta: float = 0.9,
    threads: Optional[int] = None,
) -> SPowerCurve:
    if any(b <= a for a, b in zip(rho_grid, rho_grid[1:])):
        raise InvalidArgumentError(detail="rho grid must be increasing", field="rho")
    if not 1 <= t0 <= n - 1:
        raise InvalidArgumentError(detail=f"change time t0={t0} outside [1, {n - 1}]", field="t0")
    reps = reps or get_settings().risk_reps
    powers, ses = [], []
    for rho in rho_grid:
        signal = alternative_for_rho(p, n, t0, rho, s=s, direction=direction)
        # common random numbers across the grid
        power, se = rejection_rate(
            runner, SScenarioSpec(signal=signal, noise=noise), reps, seed, "power", threads
        )
        logger.debug(f"power at rho={rho:.4g}: {power:.3f} (se {se:.3f})")
        powers.append(power)
        ses.append(se)
    smoothed = isotonic_smooth(powers)
    points = [
        SPowerPoint(rho=rho, power=pw, se=se, smoothed=float(np.clip(sm, 0.0, 1.0)))
        for rho, pw, se, sm in zip(rho_grid, powers, ses, smoothed)
    ]
    return SPowerCurve(test_id=test_id, beta=beta, reps=reps, points=points)
