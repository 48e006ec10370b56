"""Robust mean primitives.

``robust_1d`` is the univariate building block, ``sparse_cover`` the
1/2-net of 2s-sparse unit vectors, ``rsm_estimate`` the min-max sparse
estimator and ``geo_mom_mean`` the geometric median-of-means used by the
weak-moment test.
"""

import itertools
import logging
import math
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.optimize import linprog
from scipy.spatial import cKDTree
from scipy.special import comb, ndtri

from src.core.config import get_settings
from src.core.enums import RobustStrategy, RsmMode
from src.exception.client_exception import InvalidArgumentError
from src.exception.server_exception import NumericalError, ResourceLimitError
from src.schemas.robust import SRobustMeanContract, SRsmFit, SSparseCover
from src.service.core_model import upper_median

logger = logging.getLogger(__name__)

COVER_RADIUS = 0.5
NET_MARGIN = 0.45
SHORTEST_INTERVAL_C = 1.0


def _delta_fraction(n: int, delta: float) -> float:
    return min(1 / 3, SHORTEST_INTERVAL_C * math.log(1 / delta) / n)


def _shortest_interval(x: np.ndarray, delta: float) -> float:
    n = x.size
    k = math.ceil(n * (1 - _delta_fraction(n, delta)))
    ordered = np.sort(x)
    widths = ordered[k - 1 :] - ordered[: n - k + 1]
    i = int(np.argmin(widths))
    return 0.5 * (ordered[i] + ordered[i + k - 1])


def _median_of_means(x: np.ndarray, delta: float, n_groups: Optional[int] = None) -> float:
    G = n_groups or math.ceil(8 * math.log(1 / delta))
    G = max(1, min(G, x.size))
    return upper_median([chunk.mean() for chunk in np.array_split(x, G)])


def robust_1d(
    samples: Sequence[float],
    delta: float,
    strategy: Union[RobustStrategy, str] = RobustStrategy.SHORTEST_INTERVAL,
    n_groups: Optional[int] = None,
) -> float:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InvalidArgumentError(detail="robust_1d needs at least one sample")
    if not 0 < delta < 1:
        raise InvalidArgumentError(detail=f"robust_1d needs 0 < delta < 1, got {delta}")
    strategy = RobustStrategy(strategy)
    if strategy == RobustStrategy.SHORTEST_INTERVAL:
        return float(_shortest_interval(x, delta))
    if strategy == RobustStrategy.MEDIAN_OF_MEANS:
        return float(_median_of_means(x, delta, n_groups))
    return float(stats.trim_mean(x, _delta_fraction(x.size, delta)))


def _robust_1d_columns(P: np.ndarray, delta: float, strategy: RobustStrategy) -> np.ndarray:
    """robust_1d applied to every column of a (t, N) projection matrix."""
    t = P.shape[0]
    if strategy == RobustStrategy.SHORTEST_INTERVAL:
        k = math.ceil(t * (1 - _delta_fraction(t, delta)))
        ordered = np.sort(P, axis=0)
        widths = ordered[k - 1 :] - ordered[: t - k + 1]
        i = np.argmin(widths, axis=0)
        cols = np.arange(P.shape[1])
        return 0.5 * (ordered[i, cols] + ordered[i + k - 1, cols])
    return np.array([robust_1d(P[:, j], delta, strategy) for j in range(P.shape[1])])


def _sphere_candidates(k: int, count: int, seed: int) -> np.ndarray:
    sobol = stats.qmc.Sobol(d=k, scramble=True, seed=seed)
    u = np.clip(sobol.random(count), 1e-12, 1 - 1e-12)
    g = ndtri(u)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _greedy_net(points: np.ndarray, radius: float, net: Optional[list] = None) -> list:
    net = list(net or [points[0]])
    dist, _ = cKDTree(np.asarray(net)).query(points)
    while dist.max() > radius:
        far = int(np.argmax(dist))
        net.append(points[far])
        dist = np.minimum(dist, np.linalg.norm(points - points[far], axis=1))
    return net


@lru_cache(maxsize=16)
def sphere_net(k: int) -> np.ndarray:
    """Deterministic 1/2-net of the unit sphere in R^k, coverage verified on a fresh stream."""
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        m = math.ceil(math.pi / (2 * math.asin(NET_MARGIN / 2)))
        angles = 2 * math.pi * np.arange(m) / m
        return np.column_stack([np.cos(angles), np.sin(angles)])
    count = 2 ** min(10 + 2 * k, 16)
    net = _greedy_net(_sphere_candidates(k, count, seed=k), NET_MARGIN)
    for round_ in range(5):
        sample = _sphere_candidates(k, 4 * count, seed=1000 + 17 * k + round_)
        dist, _ = cKDTree(np.asarray(net)).query(sample)
        missed = sample[dist > COVER_RADIUS]
        if missed.size == 0:
            break
        logger.debug(f"sphere net k={k}: {len(missed)} sample points uncovered, refining")
        net = _greedy_net(missed, NET_MARGIN, net)
    return np.asarray(net)


def sparse_cover(
    p: int,
    s: int,
    budget: Optional[int] = None,
    fallback: Optional[bool] = None,
    seed: int = 0,
) -> SSparseCover:
    if not 1 <= s <= p:
        raise InvalidArgumentError(detail=f"sparse cover needs 1 <= s <= p, got p={p}, s={s}")
    settings = get_settings()
    budget = settings.cover_budget if budget is None else budget
    fallback = settings.cover_fallback if fallback is None else fallback
    return _build_cover(p, s, budget, fallback, seed)


@lru_cache(maxsize=64)
def _build_cover(p: int, s: int, budget: int, fallback: bool, seed: int) -> SSparseCover:
    k = min(2 * s, p)
    total = int(comb(p, k, exact=True))
    complete = total <= budget
    if complete:
        supports = list(itertools.combinations(range(p), k))
    elif fallback:
        logger.warning(
            f"sparse cover: C({p},{k})={total} supports exceed budget {budget}, sampling supports",
            extra={"p": p, "s": s, "budget": budget},
        )
        rng = np.random.default_rng(seed)
        supports = sorted({tuple(sorted(rng.choice(p, k, replace=False))) for _ in range(budget)})
    else:
        raise ResourceLimitError(
            detail=f"sparse cover needs {total} supports, budget is {budget}", p=p, s=s
        )
    net = sphere_net(k)
    vectors = np.zeros((len(supports) * net.shape[0], p))
    for i, support in enumerate(supports):
        vectors[i * net.shape[0] : (i + 1) * net.shape[0], list(support)] = net
    return SSparseCover(
        p=p, s=s, vectors=vectors, supports=tuple(supports), complete=complete
    )


def _as_samples(Z) -> np.ndarray:
    samples = np.asarray(Z, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise InvalidArgumentError(detail="expected a nonempty list of p-vectors")
    return samples


def rsm_targets(
    Z: np.ndarray, s: int, eta: float, cover: SSparseCover, strategy: RobustStrategy
) -> np.ndarray:
    """1DRobust({u^T Z_i}, eta / (6ep/s)^s) for every cover vector u."""
    p = Z.shape[1]
    log_delta = math.log(eta) - s * math.log(6 * math.e * p / s)
    delta = max(math.exp(log_delta), np.finfo(float).tiny)
    return _robust_1d_columns(Z @ cover.vectors.T, delta, strategy)


def rsm_objective(mu: np.ndarray, targets: np.ndarray, cover: SSparseCover) -> float:
    return float(np.max(np.abs(cover.vectors @ mu - targets)))


def _exact_on_support(U: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, float]:
    # min tau s.t. -tau <= U mu - m <= tau
    N, k = U.shape
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    ones = np.ones((N, 1))
    A = np.vstack([np.hstack([U, -ones]), np.hstack([-U, -ones])])
    b = np.concatenate([targets, -targets])
    bounds = [(None, None)] * k + [(0, None)]
    result = linprog(cost, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if result.status != 0:
        raise NumericalError(detail=f"RSM linear program failed: {result.message}")
    return result.x[:k], float(result.x[-1])


def _subgradient_on_support(
    U: np.ndarray, targets: np.ndarray, start: np.ndarray, steps: int
) -> Tuple[np.ndarray, float]:
    mu = start.copy()
    residual = U @ mu - targets
    best_mu, best = mu.copy(), float(np.max(np.abs(residual)))
    radius = 4 * best if best > 0 else 0.0
    for k in range(steps):
        if best == 0 or radius == 0:
            break
        i = int(np.argmax(np.abs(residual)))
        mu = mu - radius / math.sqrt(k + 1) * np.sign(residual[i]) * U[i]
        residual = U @ mu - targets
        value = float(np.max(np.abs(residual)))
        if value < best:
            best_mu, best = mu.copy(), value
    return best_mu, best


def rsm_fit(
    Z,
    s: int,
    eta: float,
    mode: Union[RsmMode, str] = RsmMode.SUBGRADIENT,
    cover: Optional[SSparseCover] = None,
    strategy: Union[RobustStrategy, str] = RobustStrategy.SHORTEST_INTERVAL,
    budget: Optional[int] = None,
    step_factor: Optional[float] = None,
) -> SRsmFit:
    Z = _as_samples(Z)
    t, p = Z.shape
    if not 1 <= s <= p:
        raise InvalidArgumentError(detail=f"RSM needs 1 <= s <= p, got s={s}, p={p}")
    if not 0 < eta < 1:
        raise InvalidArgumentError(detail=f"RSM needs 0 < eta < 1, got {eta}")
    mode, strategy = RsmMode(mode), RobustStrategy(strategy)
    settings = get_settings()
    cover = cover or sparse_cover(p, s)
    targets = rsm_targets(Z, s, eta, cover, strategy)
    supports = list(itertools.combinations(range(p), s))

    if mode == RsmMode.EXACT_SMALL:
        budget = settings.rsm_budget if budget is None else budget
        cost = len(supports) * cover.size
        if cost > budget:
            raise ResourceLimitError(
                detail=f"exact RSM needs C(p,s)*|cover|={cost}, budget is {budget}", p=p, s=s
            )
    else:
        upsilon = math.sqrt(s * math.log(math.e * p / s) / t)
        factor = settings.rsm_step_factor if step_factor is None else step_factor
        steps = math.ceil(factor / upsilon**2)
        start_full = np.array([robust_1d(Z[:, j], eta, strategy) for j in range(p)])

    best = None
    for support in supports:
        U = cover.vectors[:, list(support)]
        if mode == RsmMode.EXACT_SMALL:
            mu_s, value = _exact_on_support(U, targets)
        else:
            mu_s, value = _subgradient_on_support(U, targets, start_full[list(support)], steps)
        if best is None or value < best[1]:
            best = (mu_s, value, support)
    mu = np.zeros(p)
    mu[list(best[2])] = best[0]
    return SRsmFit(mu=mu, objective=rsm_objective(mu, targets, cover), support=best[2])


def rsm_estimate(
    Z,
    s: int,
    eta: float,
    mode: Union[RsmMode, str] = RsmMode.SUBGRADIENT,
    **kwargs,
) -> np.ndarray:
    return rsm_fit(Z, s, eta, mode, **kwargs).mu


def _weiszfeld(points: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000) -> np.ndarray:
    y = np.median(points, axis=0)
    for _ in range(max_iter):
        diff = points - y
        dist = np.linalg.norm(diff, axis=1)
        coincident = dist < 1e-12
        weights = 1.0 / dist[~coincident]
        if weights.size == 0:
            return y
        T = (points[~coincident] * weights[:, None]).sum(axis=0) / weights.sum()
        multiplicity = int(coincident.sum())
        if multiplicity:
            R = (diff[~coincident] * weights[:, None]).sum(axis=0)
            r = float(np.linalg.norm(R))
            if r <= multiplicity:
                return y
            shift = multiplicity / r
            y_next = (1 - shift) * T + shift * y
        else:
            y_next = T
        if np.linalg.norm(y_next - y) < tol:
            return y_next
        y = y_next
    logger.warning(f"Weiszfeld iteration hit max_iter={max_iter}")
    return y


def geo_mom_mean(Z, eta: float, n_groups: Optional[int] = None) -> np.ndarray:
    Z = _as_samples(Z)
    if not 0 < eta < 1:
        raise InvalidArgumentError(detail=f"geo_mom_mean needs 0 < eta < 1, got {eta}")
    G = n_groups or math.ceil(8 * math.log(1 / eta))
    if Z.shape[0] < G:
        raise InvalidArgumentError(
            detail=f"geo_mom_mean needs at least {G} samples, got {Z.shape[0]}"
        )
    means = np.array([chunk.mean(axis=0) for chunk in np.array_split(Z, G)])
    return _weiszfeld(means)


def contract_for(
    estimator: str, eta: float, strategy: RobustStrategy = RobustStrategy.SHORTEST_INTERVAL
) -> SRobustMeanContract:
    """Deviation contract for an estimator id as reported in ``SDecision.estimator``."""
    if estimator.startswith("rsm"):
        form = "sparse"
    elif estimator == "geo-mom":
        form = "weak-moment"
    else:
        raise InvalidArgumentError(detail=f"no deviation contract for estimator {estimator!r}")
    return SRobustMeanContract(estimator=estimator, eta=eta, bound_form=form, strategy=strategy)
