"""Tests built on the robust mean estimators.

The RSM sparse test, the polynomial-time dispatching sparse test, the
sparsity-adaptive test and the weak-moment test share one layout: scales up
to ``delta1`` use a plain statistic, larger scales a robust estimate at the
per-scale failure probability ``eta_t``.
"""

import logging
import math
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.core.enums import RobustStrategy, RsmMode, TestId
from src.exception.client_exception import InvalidArgumentError
from src.schemas.decision import SDecision, SScaleDiagnostic, decide
from src.schemas.robust import SSparseCover
from src.schemas.thresholds import (
    SAdaptiveThresholds,
    SConstants,
    SMomThresholds,
    SRegimeSchedule,
    SRobustThresholds,
)
from src.service import mom
from src.service.core_model import (
    MatrixLike,
    as_array,
    dyadic_grid,
    loglog8n,
    pair_differences,
    sparsity_grid,
)
from src.service.robust_mean import geo_mom_mean, rsm_fit, sparse_cover
from src.service.subweibull import sparse_cells

logger = logging.getLogger(__name__)

ETA_CAP = 0.5


def _log(x: float) -> float:
    return math.log(x) if x > 1 else 0.0


def _cap_eta(log_eta: float) -> float:
    return min(math.exp(log_eta), ETA_CAP)


def combined_predicate(n: int, alpha: float) -> float:
    """log^{alpha-2}(log 8n), the dimension below which RSM is used."""
    return loglog8n(n) ** (alpha - 2)


def combined_branch(p: int, n: int, alpha: float) -> Tuple[str, float]:
    value = combined_predicate(n, alpha)
    return ("rsm" if p < value else "mom"), value


def rsm_schedule(
    p: int,
    n: int,
    s: int,
    eps: float = 0.1,
    constants: Optional[SConstants] = None,
    adaptive: bool = False,
) -> SRegimeSchedule:
    c = constants or SConstants()
    C = c.C6 if adaptive else c.C3
    budget = 80 * s if adaptive else 16
    entropy = s * math.log(math.e * p / s)
    delta1 = C * (entropy + math.log(budget / eps))
    delta2 = C * (entropy + math.log(budget * math.log(2 * n) / eps))
    eta = {
        t: _cap_eta(entropy - min(t, delta2) / C)
        for t in dyadic_grid(n).scales
        if t > delta1
    }
    return SRegimeSchedule(delta1=delta1, delta2=delta2, eta=eta)


def weakmoment_schedule(
    n: int, eps: float = 0.1, constants: Optional[SConstants] = None
) -> SRegimeSchedule:
    c = constants or SConstants()
    delta1 = c.C2 * math.log(16 / eps)
    delta2 = c.C2 * math.log(16 * math.log(2 * n) / eps)
    eta = {t: _cap_eta(-min(t, delta2) / c.C2) for t in dyadic_grid(n).scales if t > delta1}
    return SRegimeSchedule(delta1=delta1, delta2=delta2, eta=eta)


def rsm_thresholds(
    p: int,
    n: int,
    s: int,
    alpha: float = 4.0,
    eps: float = 0.1,
    constants: Optional[SConstants] = None,
    adaptive: bool = False,
) -> SRobustThresholds:
    if not 1 <= s <= p:
        raise InvalidArgumentError(detail=f"RSM thresholds need 1 <= s <= p, got s={s}")
    c = constants or SConstants()
    schedule = rsm_schedule(p, n, s, eps, c, adaptive)
    d1, d2 = schedule.delta1, schedule.delta2
    C_a, C_small, C_rsm = (c.C4, c.C5, c.C7) if adaptive else (c.C1, c.C2, c.C4)
    inflation = s**0.75 if adaptive else math.sqrt(s)
    small = {}
    for t in dyadic_grid(n).scales:
        if t > d1:
            break
        small[t] = C_small * (
            s * (p / s) ** (2 / alpha) if t == 1 else inflation * math.sqrt(_log(d1))
        )
    return SRobustThresholds(
        a=C_a * ((p / s) ** (1 / alpha) + math.sqrt(_log(_log(d1)) / s)),
        r_small=small,
        r_robust={t: C_rsm * min(t, d2) for t in schedule.eta},
        schedule=schedule,
        estimator="rsm",
    )


def weakmoment_thresholds(
    p: int,
    n: int,
    alpha: float,
    eps: float = 0.1,
    constants: Optional[SConstants] = None,
) -> SRobustThresholds:
    if not 1 < alpha <= 2:
        raise InvalidArgumentError(detail=f"weak-moment thresholds need 1 < alpha <= 2, got {alpha}")
    c = constants or SConstants()
    schedule = weakmoment_schedule(n, eps, c)
    d1 = schedule.delta1
    lead = d1 ** ((2 - alpha) / (2 * alpha)) * _log(d1) ** (1 / alpha)
    power = (alpha - 1) / alpha
    return SRobustThresholds(
        r_small={t: c.C1 * lead * math.sqrt(p / t) for t in dyadic_grid(n).scales if t <= d1},
        r_robust={
            t: c.C3 * (math.sqrt(p / t) + (p / t) ** power + (math.log(1 / eta) / t) ** power)
            for t, eta in schedule.eta.items()
        },
        schedule=schedule,
        estimator="geo-mom",
    )


def adaptive_mom_thresholds(
    p: int, n: int, s: int, alpha: float = 4.0, constants: Optional[SConstants] = None
) -> SMomThresholds:
    c = constants or SConstants()
    groups = mom.sparse_groups(n)
    return SMomThresholds(
        a=c.C2 * ((p / s) ** (1 / alpha) + math.sqrt(loglog8n(n) / s)),
        r_t={
            t: c.C3 * (s * (p / s) ** (2 / alpha) if t == 1 else s**0.75 * G)
            for t, G in groups.items()
        },
        groups=groups,
    )


def adaptive_thresholds(
    p: int,
    n: int,
    alpha: float = 4.0,
    eps: float = 0.1,
    constants: Optional[SConstants] = None,
) -> SAdaptiveThresholds:
    c = constants or SConstants()
    use_mom = p > combined_predicate(n, alpha)
    sparse: Dict[int, Union[SMomThresholds, SRobustThresholds]] = {}
    for s in sparsity_grid(p).levels:
        if use_mom:
            sparse[s] = adaptive_mom_thresholds(p, n, s, alpha, c)
        else:
            sparse[s] = rsm_thresholds(p, n, s, alpha, eps, c, adaptive=True)
    return SAdaptiveThresholds(
        dense=mom.mom_thresholds(TestId.DENSE_P, p, n, alpha=alpha, constants=c),
        sparse=sparse,
    )


def _lookup(table: Dict[int, float], t: int, name: str) -> float:
    if t not in table:
        raise InvalidArgumentError(detail=f"{name} has no threshold for scale t={t}")
    return table[t]


def test_sparse_P_rsm(
    X: MatrixLike,
    s: int,
    thr: SRobustThresholds,
    mode: Union[RsmMode, str] = RsmMode.SUBGRADIENT,
    strategy: Union[RobustStrategy, str] = RobustStrategy.SHORTEST_INTERVAL,
    cover: Optional[SSparseCover] = None,
) -> SDecision:
    Z = pair_differences(X).values
    p = Z.shape[0]
    if not 1 <= s <= p:
        raise InvalidArgumentError(detail=f"sparsity must satisfy 1 <= s <= p, got s={s}")
    mode = RsmMode(mode)
    scales = dyadic_grid(as_array(X).shape[1]).scales
    d1 = thr.schedule.delta1
    small = [t for t in scales if t <= d1]
    diagnostics = [
        SScaleDiagnostic(
            t=t,
            stat=stat,
            threshold=_lookup(thr.r_small, t, "small-scale branch"),
            selected_count=count,
            branch="t1" if t == 1 else None,
            s=s,
        )
        for t, stat, count in sparse_cells(Z, thr.a, small)
    ]
    warnings = []
    large = [t for t in scales if t > d1]
    if large:
        cover = cover or sparse_cover(p, s)
        if not cover.complete:
            warnings.append(f"sparse cover for p={p}, s={s} uses sampled supports")
    for t in large:
        eta = thr.schedule.eta.get(t)
        if eta is None:
            raise InvalidArgumentError(detail=f"schedule has no eta for scale t={t}")
        fit = rsm_fit(Z[:, :t].T, s, eta, mode, cover=cover, strategy=strategy)
        diagnostics.append(
            SScaleDiagnostic(
                t=t,
                stat=t * float(np.sum(fit.mu**2)),
                threshold=_lookup(thr.r_robust, t, "RSM branch"),
                selected_count=len(fit.support),
                branch="rsm",
                s=s,
            )
        )
    return decide(
        TestId.SPARSE_P_RSM, diagnostics, estimator=f"rsm:{mode.value}", warnings=warnings
    )


def test_sparse_P_combined(
    X: MatrixLike,
    s: int,
    thr: Union[SMomThresholds, SRobustThresholds],
    alpha: float = 4.0,
    **rsm_options,
) -> SDecision:
    p, n = as_array(X).shape
    branch, value = combined_branch(p, n, alpha)
    expected = SRobustThresholds if branch == "rsm" else SMomThresholds
    if not isinstance(thr, expected):
        raise InvalidArgumentError(
            detail=f"combined test dispatches to {branch} for p={p}, n={n}, alpha={alpha}; "
            f"got {thr.kind} thresholds"
        )
    logger.debug(f"combined sparse test: p={p}, predicate={value:.4g}, branch={branch}")
    if branch == "rsm":
        decision = test_sparse_P_rsm(X, s, thr, **rsm_options)
    else:
        decision = mom.test_sparse_P_mom(X, s, thr)
    return decision.model_copy(
        update={"test_id": TestId.SPARSE_P_COMBINED, "branch": branch, "dispatch_value": value}
    )


def test_adaptive(
    X: MatrixLike, thr: SAdaptiveThresholds, alpha: float = 4.0, **rsm_options
) -> SDecision:
    p, n = as_array(X).shape
    dense = mom.test_dense_P(X, thr.dense)
    diagnostics = [d.model_copy(update={"branch": "dense"}) for d in dense.diagnostics]
    warnings = []
    for s in sparsity_grid(p).levels:
        if s not in thr.sparse:
            raise InvalidArgumentError(detail=f"adaptive thresholds have no branch for s={s}")
        branch_thr = thr.sparse[s]
        if isinstance(branch_thr, SRobustThresholds):
            decision = test_sparse_P_rsm(X, s, branch_thr, **rsm_options)
        else:
            decision = mom.test_sparse_P_mom(X, s, branch_thr)
        warnings.extend(decision.warnings)
        diagnostics.extend(
            d.model_copy(update={"branch": f"sparse:{s}", "s": s}) for d in decision.diagnostics
        )
    value = combined_predicate(n, alpha)
    branch = "mom" if p > value else "rsm"
    result = decide(
        TestId.ADAPTIVE, diagnostics, branch=branch, dispatch_value=value, warnings=warnings
    )
    for d in result.fired:
        logger.debug(f"adaptive test fired on branch={d.branch} at t={d.t}")
    return result


def test_weakmoment(X: MatrixLike, thr: SRobustThresholds) -> SDecision:
    Z = pair_differences(X).values
    scales = dyadic_grid(as_array(X).shape[1]).scales
    d1 = thr.schedule.delta1
    diagnostics = []
    warnings = []
    for t in scales:
        if t <= d1:
            diagnostics.append(
                SScaleDiagnostic(
                    t=t,
                    stat=float(np.linalg.norm(Z[:, :t].mean(axis=1))),
                    threshold=_lookup(thr.r_small, t, "small-scale branch"),
                )
            )
            continue
        eta = thr.schedule.eta.get(t)
        if eta is None:
            raise InvalidArgumentError(detail=f"schedule has no eta for scale t={t}")
        groups = math.ceil(8 * math.log(1 / eta))
        if groups > t:
            warnings.append(f"geo-mom groups clamped from {groups} to {t} at t={t}")
            groups = t
        estimate = geo_mom_mean(Z[:, :t].T, eta, n_groups=groups)
        diagnostics.append(
            SScaleDiagnostic(
                t=t,
                stat=float(np.linalg.norm(estimate)),
                threshold=_lookup(thr.r_robust, t, "robust branch"),
                branch="rm",
            )
        )
    return decide(TestId.WEAK_MOMENT, diagnostics, estimator="geo-mom", warnings=warnings)
