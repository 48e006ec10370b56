import logging
import math
from functools import lru_cache
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.core.enums import GridKind, Provenance, SecondMomentKind, TestId
from src.exception.client_exception import InvalidArgumentError
from src.schemas.decision import SDecision, SScaleDiagnostic, decide
from src.schemas.matrix import SPairedMatrix
from src.schemas.thresholds import SConstants, SMomThresholds, SSecondMomentModel
from src.service.core_model import (
    MatrixLike,
    as_array,
    dyadic_grid,
    loglog8n,
    mom_delta,
    pair_differences,
    upper_median,
    upper_median_rows,
)

logger = logging.getLogger(__name__)

Centering = Union[float, np.ndarray]

MULTI_MIN_N = 50


def _group_means(block: np.ndarray, G: int) -> np.ndarray:
    p, k = block.shape
    if G < 1 or k % G:
        raise InvalidArgumentError(detail=f"group count G={G} does not divide {k} samples")
    return block.reshape(p, G, k // G).mean(axis=2)


def group_sums(
    Z: Union[SPairedMatrix, np.ndarray], t: int, G: int, centering: Optional[Centering] = None
) -> np.ndarray:
    """Entry g is sum_j (Zbar_{t,g}(j)^2 - G/t) over contiguous blocks of Z_1..Z_t."""
    values = Z.values if isinstance(Z, SPairedMatrix) else np.asarray(Z, dtype=float)
    if t > values.shape[1]:
        raise InvalidArgumentError(detail=f"scale t={t} exceeds m={values.shape[1]}")
    if G < 1 or t % G:
        raise InvalidArgumentError(detail=f"group count G={G} does not divide t={t}")
    means = _group_means(values[:, :t], G)
    center = G / t if centering is None else centering
    return np.sum(means**2 - center, axis=0)


def dense_groups(n: int, delta: Optional[int] = None) -> Dict[int, int]:
    cap = delta or mom_delta(n, 3)
    return {t: min(t, cap) for t in dyadic_grid(n).scales}


def sparse_groups(n: int, delta: Optional[int] = None) -> Dict[int, int]:
    cap = delta or mom_delta(n, 4)
    return {t: max(min(t, cap) // 2, 1) for t in dyadic_grid(n).scales}


def temporal_delta(n: int, C2: float = 1.0) -> int:
    inner = math.log(math.log(math.log(16 * n)))
    exponent = math.ceil(math.log2(C2 * loglog8n(n) * inner**2))
    return 2 ** max(exponent, 0)


def stat_mom_dense(X: MatrixLike, t: int, G: Optional[int] = None) -> float:
    n = as_array(X).shape[1]
    if t not in dyadic_grid(n):
        raise InvalidArgumentError(detail=f"scale t={t} is not in the dyadic grid of n={n}")
    G = G or min(t, mom_delta(n, 3))
    return t * upper_median(group_sums(pair_differences(X), t, G))


def test_dense_P(X: MatrixLike, thr: SMomThresholds) -> SDecision:
    Z = pair_differences(X).values
    diagnostics = []
    for t in dyadic_grid(as_array(X).shape[1]).scales:
        stat = t * upper_median(group_sums(Z, t, thr.plan(t).G))
        diagnostics.append(SScaleDiagnostic(t=t, stat=stat, threshold=thr.threshold(t)))
    return decide(TestId.DENSE_P, diagnostics)


def mom_sparse_cell(Z: np.ndarray, t: int, a: float, G: int) -> Tuple[float, int]:
    if t == 1:
        z = Z[:, 0]
        keep = np.abs(z) >= a
        return float(np.sum(z[keep] ** 2 - 1)), int(keep.sum())
    if (t // 2) % G:
        raise InvalidArgumentError(detail=f"group count G={G} does not divide t/2={t // 2}")
    selection = Z[:, 1:t:2].sum(axis=1) * math.sqrt(2 / t)
    keep = np.abs(selection) >= a
    return _aggregate_odd_half(Z, t, G, keep), int(keep.sum())


def _aggregate_odd_half(Z: np.ndarray, t: int, G: int, keep: np.ndarray) -> float:
    means = _group_means(Z[:, 0:t:2], G)
    sums = np.sum((means**2 - 2 * G / t) * keep[:, None], axis=0)
    return (t / 2) * upper_median(sums)


def stat_mom_sparse(X: MatrixLike, t: int, a: float, G: int) -> float:
    n = as_array(X).shape[1]
    if t not in dyadic_grid(n):
        raise InvalidArgumentError(detail=f"scale t={t} is not in the dyadic grid of n={n}")
    return mom_sparse_cell(pair_differences(X).values, t, a, G)[0]


def test_sparse_P_mom(X: MatrixLike, s: int, thr: SMomThresholds) -> SDecision:
    Z = pair_differences(X).values
    if not 1 <= s <= Z.shape[0]:
        raise InvalidArgumentError(detail=f"sparsity must satisfy 1 <= s <= p, got s={s}")
    a = thr.a or 0.0
    diagnostics = []
    for t in dyadic_grid(as_array(X).shape[1]).scales:
        stat, count = mom_sparse_cell(Z, t, a, thr.plan(t).G)
        diagnostics.append(
            SScaleDiagnostic(t=t, stat=stat, threshold=thr.threshold(t), selected_count=count, s=s)
        )
    return decide(TestId.SPARSE_P_MOM, diagnostics)


def multi_group_count(n: int) -> int:
    return 2 ** (1 + max(math.ceil(math.log2(math.log(n))), 0))


def multi_grid(n: int) -> List[Tuple[int, range]]:
    """J as a list of (t, range of ell) blocks."""
    if n < 3:
        raise InvalidArgumentError(detail=f"multi-change grid is empty for n={n}")
    lo = multi_group_count(n)
    hi = 2 ** (int(math.floor(math.log2(n))) - 1)
    blocks = []
    t = lo
    while t <= hi:
        if n - t >= t:
            blocks.append((t, range(t, n - t + 1)))
        t *= 2
    if not blocks:
        raise InvalidArgumentError(detail=f"multi-change grid is empty for n={n}")
    return blocks


def multi_cells(X: MatrixLike, G: Optional[int] = None) -> List[Tuple[int, int, float]]:
    """(ell, t, A_{ell,t}) over J using local pairs X_{ell-t+i} - X_{ell+t+1-i}."""
    values = as_array(X)
    p, n = values.shape
    G = G or multi_group_count(n)
    csum = np.concatenate([np.zeros((p, 1)), np.cumsum(values, axis=1)], axis=1)
    cells = []
    for t, ells in multi_grid(n):
        if t % G:
            raise InvalidArgumentError(detail=f"group count G={G} does not divide t={t}")
        b = t // G
        ell = np.asarray(ells)
        sums = np.empty((ell.size, G))
        for g in range(1, G + 1):
            # 0-based columns: left block ell-t+(g-1)b .. +b, mirrored right block
            left = ell - t + (g - 1) * b
            right = ell + t - g * b
            zbar = (csum[:, left + b] - csum[:, left] - csum[:, right + b] + csum[:, right]) / (
                math.sqrt(2) * b
            )
            sums[:, g - 1] = np.sum(zbar**2 - G / t, axis=0)
        stats = t * upper_median_rows(sums)
        cells.extend((int(l), t, float(a)) for l, a in zip(ell, stats))
    return cells


def test_multi(X: MatrixLike, thr: SMomThresholds) -> SDecision:
    n = as_array(X).shape[1]
    warnings = []
    if n < MULTI_MIN_N:
        logger.warning(f"multi-change test run with n={n} < {MULTI_MIN_N}")
        warnings.append(f"n={n} is below the recommended minimum {MULTI_MIN_N}")
    G = next(iter(thr.groups.values()), None) if thr.groups else None
    diagnostics = [
        SScaleDiagnostic(t=t, ell=ell, stat=stat, threshold=thr.threshold(t))
        for ell, t, stat in multi_cells(X, G)
    ]
    return decide(TestId.MULTI, diagnostics, grid_kind=GridKind.MULTI, warnings=warnings)


def estimate_lag1(H: MatrixLike) -> float:
    values = np.asarray(H.values if hasattr(H, "values") else H, dtype=float)
    p, m = values.shape
    if m < 2:
        raise InvalidArgumentError(detail=f"lag-1 estimate needs m >= 2 columns, got {m}")
    centered = values - values.mean(axis=1, keepdims=True)
    return float(np.sum(centered[:, :-1] * centered[:, 1:]) / ((m - 1) * p))


def ma1_centering(t: int, G: int, r1: float) -> float:
    b = t / G
    return (b + 2 * (b - 1) * r1) / b**2


def _known_centering(model: SSecondMomentModel, t: int, p: int, G: int) -> np.ndarray:
    if t not in model.known:
        raise InvalidArgumentError(detail=f"known second-moment model has no value for t={t}")
    value = np.asarray(model.known[t], dtype=float)
    try:
        return np.broadcast_to(value, (p, G))
    except ValueError:
        raise InvalidArgumentError(
            detail=f"known second moments at t={t} have shape {value.shape}, expected scalar, ({G},) or ({p}, {G})"
        )


def test_temporal(
    X: MatrixLike, thr: SMomThresholds, second_moment_model: SSecondMomentModel
) -> SDecision:
    Z = pair_differences(X).values
    p = Z.shape[0]
    if second_moment_model.kind == SecondMomentKind.MA1_PLUGIN and second_moment_model.r1 is None:
        raise InvalidArgumentError(detail="ma1-plugin second-moment model needs r1")
    diagnostics = []
    for t in dyadic_grid(as_array(X).shape[1]).scales:
        G = thr.plan(t).G
        if second_moment_model.kind == SecondMomentKind.KNOWN:
            center = _known_centering(second_moment_model, t, p, G)
        else:
            center = ma1_centering(t, G, second_moment_model.r1)
        stat = t * upper_median(group_sums(Z, t, G, centering=center))
        diagnostics.append(SScaleDiagnostic(t=t, stat=stat, threshold=thr.threshold(t)))
    return decide(TestId.TEMPORAL, diagnostics)


def default_t_res(p: int, n: int, s: int) -> float:
    return 32 * (math.log(math.e**2 * p / s) + loglog8n(n) / s)


@lru_cache(maxsize=None)
def _clamped_default_t_res(p: int, n: int, s: int) -> float:
    t_res = default_t_res(p, n, s)
    largest = (n - 1) // 2
    if 2 * t_res + 1 > n and largest >= 1:
        logger.warning(
            f"default t_res={t_res:.2f} leaves no admissible change time, clamped to {largest}",
            extra={"p": p, "n": n, "s": s},
        )
        return float(largest)
    return t_res


def resolve_t_res(p: int, n: int, s: int, t_res: Optional[float] = None) -> float:
    """Explicit t_res as given; the default is clamped to floor((n-1)/2)."""
    return _clamped_default_t_res(p, n, s) if t_res is None else t_res


def restricted_group_count(t_res: float) -> int:
    return 2 ** max(int(math.floor(math.log2(t_res / 2))), 0) if t_res >= 2 else 1


def restricted_grid(n: int, t_res: float) -> Tuple[int, ...]:
    if t_res < 1:
        raise InvalidArgumentError(detail=f"t_res must be >= 1, got {t_res}")
    if 2 * t_res + 1 > n:
        raise InvalidArgumentError(
            detail=f"t_res={t_res} leaves no admissible change time for n={n}"
        )
    lo = math.ceil((t_res + 1) / 2)
    hi = n + 1 - lo
    scales = tuple(t for t in dyadic_grid(n).scales if lo <= t <= hi)
    if not scales:
        raise InvalidArgumentError(detail=f"restricted grid is empty for n={n}, t_res={t_res}")
    return scales


def restricted_selection(Z: np.ndarray, t: int, g_res: int, a_res: float) -> np.ndarray:
    """Coordinates whose median-of-means CUSUM on the even half reaches a_res."""
    if t == 1:
        return np.abs(Z[:, 0]) >= a_res
    half = Z[:, 1:t:2]
    if half.shape[1] % g_res:
        raise InvalidArgumentError(detail=f"G_res={g_res} does not divide t/2={half.shape[1]}")
    medians = upper_median_rows(_group_means(half, g_res))
    return math.sqrt(t / (2 * g_res)) * np.abs(medians) >= a_res


def _restricted_params(thr: SMomThresholds) -> Tuple[float, int]:
    if thr.a_res is None or thr.g_res is None:
        raise InvalidArgumentError(detail="restricted tests need a_res and g_res")
    return thr.a_res, thr.g_res


def test_restricted_P(X: MatrixLike, s: int, t_res: float, thr: SMomThresholds) -> SDecision:
    Z = pair_differences(X).values
    a_res, g_res = _restricted_params(thr)
    diagnostics = []
    for t in restricted_grid(as_array(X).shape[1], t_res):
        keep = restricted_selection(Z, t, g_res, a_res)
        if t == 1:
            stat = float(np.sum(Z[keep, 0] ** 2 - 1))
        else:
            stat = _aggregate_odd_half(Z, t, thr.plan(t).G, keep)
        diagnostics.append(
            SScaleDiagnostic(t=t, stat=stat, threshold=thr.threshold(t), selected_count=int(keep.sum()), s=s)
        )
    return decide(TestId.RESTRICTED_P, diagnostics, grid_kind=GridKind.RESTRICTED)


def test_restricted_G(X: MatrixLike, s: int, t_res: float, thr: SMomThresholds) -> SDecision:
    Z = pair_differences(X).values
    a_res, g_res = _restricted_params(thr)
    diagnostics = []
    for t in restricted_grid(as_array(X).shape[1], t_res):
        keep = restricted_selection(Z, t, g_res, a_res)
        if t == 1:
            y1 = Z[:, 0]
        else:
            y1 = Z[:, 0:t:2].sum(axis=1) / math.sqrt(t / 2)
        stat = float(np.sum(y1[keep] ** 2 - 1))
        diagnostics.append(
            SScaleDiagnostic(t=t, stat=stat, threshold=thr.threshold(t), selected_count=int(keep.sum()), s=s)
        )
    return decide(TestId.RESTRICTED_G, diagnostics, grid_kind=GridKind.RESTRICTED)


def mom_thresholds(
    test_id: TestId,
    p: int,
    n: int,
    s: Optional[int] = None,
    alpha: float = 4.0,
    constants: Optional[SConstants] = None,
    t_res: Optional[float] = None,
    delta: Optional[int] = None,
) -> SMomThresholds:
    c = constants or SConstants()
    L = loglog8n(n)
    if test_id == TestId.DENSE_P:
        groups = dense_groups(n, delta)
        scale = p ** max(0.5, 2 / alpha)
        return SMomThresholds(r_t={t: c.C1 * scale * G for t, G in groups.items()}, groups=groups)
    if test_id == TestId.TEMPORAL:
        groups = dense_groups(n, delta or temporal_delta(n, c.C2))
        return SMomThresholds(r_t={t: c.C1 * math.sqrt(p) * G for t, G in groups.items()}, groups=groups)
    if test_id == TestId.MULTI:
        G = multi_group_count(n)
        return SMomThresholds(
            r=c.C1 * math.sqrt(p) * G, groups={t: G for t, _ in multi_grid(n)}
        )
    if s is None or not 1 <= s <= p:
        raise InvalidArgumentError(detail=f"sparse thresholds need 1 <= s <= p, got s={s}")
    if test_id == TestId.SPARSE_P_MOM:
        groups = sparse_groups(n, delta)
        return SMomThresholds(
            a=c.C1 * ((p / s) ** (1 / alpha) + math.sqrt(L / s)),
            r_t={
                t: c.C2 * (s * (p / s) ** (2 / alpha) if t == 1 else math.sqrt(s) * G)
                for t, G in groups.items()
            },
            groups=groups,
        )
    t_res = resolve_t_res(p, n, s, t_res)
    scales = restricted_grid(n, t_res)
    g_res = restricted_group_count(t_res)
    if test_id == TestId.RESTRICTED_P:
        groups = {t: G for t, G in sparse_groups(n, delta).items() if t in scales}
        return SMomThresholds(
            r_t={t: c.C2 * math.sqrt(s) * G for t, G in groups.items()},
            groups=groups,
            a_res=c.C1,
            g_res=g_res,
        )
    if test_id == TestId.RESTRICTED_G:
        return SMomThresholds(r=c.C2 * (math.sqrt(s * L) + L), a_res=c.C1, g_res=g_res)
    raise InvalidArgumentError(detail=f"{test_id.value} is not a median-of-means test")
