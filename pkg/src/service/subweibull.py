import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.enums import Provenance, TestId
from src.exception.client_exception import InvalidArgumentError
from src.schemas.decision import SDecision, SScaleDiagnostic, decide
from src.schemas.matrix import SCusumVector, SSplitCusumPair
from src.schemas.thresholds import SCombinedThresholds, SConstants, SSubweibullThresholds
from src.service.core_model import MatrixLike, dyadic_grid, loglog8n, pair_differences

logger = logging.getLogger(__name__)


def _paired(X: MatrixLike) -> np.ndarray:
    return pair_differences(X).values


def _check_scale(n: int, t: int) -> None:
    if t not in dyadic_grid(n):
        raise InvalidArgumentError(detail=f"scale t={t} is not in the dyadic grid of n={n}")


def cusum_stat(X: MatrixLike, t: int) -> SCusumVector:
    Z = _paired(X)
    _check_scale(_n_of(X), t)
    return SCusumVector(t=t, values=Z[:, :t].sum(axis=1) / math.sqrt(t))


def _cusum_table(Z: np.ndarray, scales) -> Dict[int, np.ndarray]:
    csum = np.cumsum(Z, axis=1)
    return {t: csum[:, t - 1] / math.sqrt(t) for t in scales}


def stat_dense_G(X: MatrixLike) -> Dict[int, float]:
    Z = _paired(X)
    scales = dyadic_grid(_n_of(X)).scales
    return {t: float(np.sum(y**2 - 1)) for t, y in _cusum_table(Z, scales).items()}


def test_dense_G(X: MatrixLike, thr: SSubweibullThresholds) -> SDecision:
    stats = stat_dense_G(X)
    diagnostics = [SScaleDiagnostic(t=t, stat=a, threshold=thr.r) for t, a in stats.items()]
    return decide(TestId.DENSE_G, diagnostics)


def _split(Z: np.ndarray, t: int) -> Tuple[np.ndarray, np.ndarray]:
    half = math.sqrt(t / 2)
    return Z[:, 0:t:2].sum(axis=1) / half, Z[:, 1:t:2].sum(axis=1) / half


def split_cusum(X: MatrixLike, t: int) -> SSplitCusumPair:
    if t == 1:
        raise InvalidArgumentError(detail="split CUSUM needs t >= 2")
    _check_scale(_n_of(X), t)
    y1, y2 = _split(_paired(X), t)
    return SSplitCusumPair(t=t, y1=y1, y2=y2)


def sparse_cells(Z: np.ndarray, a: float, scales) -> List[Tuple[int, float, int]]:
    """(t, A_{t,a}, selected count) for every scale; t=1 selects and aggregates on Y_1."""
    cells = []
    for t in scales:
        if t == 1:
            y = Z[:, 0]
            keep = np.abs(y) >= a
            cells.append((1, float(np.sum((y[keep] ** 2) - 1)), int(keep.sum())))
            continue
        y1, y2 = _split(Z, t)
        keep = np.abs(y2) >= a
        cells.append((t, float(np.sum(y1[keep] ** 2 - 1)), int(keep.sum())))
    return cells


def stat_sparse_G(X: MatrixLike, a: float) -> Dict[int, float]:
    if a < 0:
        raise InvalidArgumentError(detail=f"selection threshold must be >= 0, got {a}")
    cells = sparse_cells(_paired(X), a, dyadic_grid(_n_of(X)).scales)
    return {t: stat for t, stat, _ in cells}


def test_sparse_G(X: MatrixLike, s: int, thr: SSubweibullThresholds) -> SDecision:
    Z = _paired(X)
    if not 1 <= s <= Z.shape[0]:
        raise InvalidArgumentError(detail=f"sparsity must satisfy 1 <= s <= p, got s={s}")
    diagnostics = [
        SScaleDiagnostic(
            t=t,
            stat=stat,
            threshold=thr.r1 if t == 1 else thr.r,
            selected_count=count,
            branch="t1" if t == 1 else None,
            s=s,
        )
        for t, stat, count in sparse_cells(Z, thr.a, dyadic_grid(_n_of(X)).scales)
    ]
    return decide(TestId.SPARSE_G, diagnostics)


def test_gaussian_combined(X: MatrixLike, s: int, thr: SCombinedThresholds) -> SDecision:
    dense = test_dense_G(X, thr.dense)
    sparse = test_sparse_G(X, s, thr.sparse)
    diagnostics = [d.model_copy(update={"branch": "dense"}) for d in dense.diagnostics]
    diagnostics += [
        d.model_copy(update={"branch": f"sparse:{s}" if d.branch is None else d.branch})
        for d in sparse.diagnostics
    ]
    return decide(TestId.GAUSSIAN_COMBINED, diagnostics)


def subweibull_thresholds(
    test_id: TestId,
    p: int,
    n: int,
    s: Optional[int] = None,
    alpha: float = 2.0,
    constants: Optional[SConstants] = None,
) -> SSubweibullThresholds:
    c = constants or SConstants()
    L = loglog8n(n)
    if test_id == TestId.DENSE_G:
        return SSubweibullThresholds(r=c.C1 * (math.sqrt(p * L) + L))
    if s is None or not 1 <= s <= p:
        raise InvalidArgumentError(detail=f"sparse thresholds need 1 <= s <= p, got s={s}")
    log_eps = math.log(math.e * p / s)
    return SSubweibullThresholds(
        a=c.C1 * (log_eps ** (1 / alpha) + math.sqrt(L / s)),
        r=c.C2 * (math.sqrt(s * L) + L),
        r1=c.C3 * s * log_eps ** (2 / alpha),
        provenance=Provenance.THEORY,
    )


def _n_of(X: MatrixLike) -> int:
    return X.n if hasattr(X, "n") else np.asarray(X).shape[1]
