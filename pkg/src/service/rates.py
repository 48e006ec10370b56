"""Closed-form minimax testing rates.

Every function returns the unnormalized rate for rho^2 (constants dropped),
except the weak-moment family, which is stated for rho_{t0} itself.
"""

import math
from typing import Callable, Dict, Iterable, List, Tuple

from src.core.enums import Curve, RateFamily, RateRegime
from src.exception.client_exception import InvalidArgumentError
from src.schemas.rates import SPhasePoint, SRateQuery
from src.service.core_model import loglog8n


def _entropy(q: SRateQuery) -> float:
    return math.log(math.e * q.p / q.s)


def _subweibull_dense(q: SRateQuery) -> float:
    L = loglog8n(q.n)
    return math.sqrt(q.p * L) + L


def _subweibull_sparse(q: SRateQuery) -> float:
    return q.s * _entropy(q) ** (2 / q.alpha) + loglog8n(q.n)


def _subweibull_combined(q: SRateQuery) -> float:
    L = loglog8n(q.n)
    return min(q.s * _entropy(q) ** (2 / q.alpha), math.sqrt(q.p * L)) + L


def _polytail_dense(q: SRateQuery) -> float:
    return q.p ** max(0.5, 2 / q.alpha) * loglog8n(q.n)


def _require_alpha4(q: SRateQuery) -> None:
    if q.alpha < 4:
        raise InvalidArgumentError(
            detail=f"sparse polynomial-tail rates need alpha >= 4, got {q.alpha}"
        )


def _polytail_sparse(q: SRateQuery) -> float:
    _require_alpha4(q)
    return q.s * (q.p / q.s) ** (2 / q.alpha) + loglog8n(q.n)


def _polytail_sparse_mom(q: SRateQuery) -> float:
    _require_alpha4(q)
    return q.s * ((q.p / q.s) ** (2 / q.alpha) + loglog8n(q.n))


def _polytail_combined(q: SRateQuery) -> float:
    L = loglog8n(q.n)
    if q.alpha < 4:
        return q.p ** (2 / q.alpha) * L
    return min(q.s * (q.p / q.s) ** (2 / q.alpha), math.sqrt(q.p) * L) + L


def _polytail_restricted(q: SRateQuery) -> float:
    return q.s * (_entropy(q) + loglog8n(q.n))


def _subweibull_restricted(q: SRateQuery) -> float:
    return q.s * _entropy(q) + loglog8n(q.n)


def _multi_upper(q: SRateQuery) -> float:
    return math.sqrt(q.p) * math.log(q.n)


def _multi_lower(q: SRateQuery) -> float:
    return math.sqrt(q.p * math.log(q.n)) + math.log(q.n)


def _temporal_upper(q: SRateQuery) -> float:
    return math.sqrt(q.p) * loglog8n(q.n) * math.log(math.log(math.log(64 * q.n))) ** 2


def omega1(p: int, n: int, s: int) -> int:
    return int(s > math.sqrt(p * loglog8n(n)))


def omega2(p: int, n: int, s: int, alpha: float) -> float:
    return 0.5 * int(s > math.sqrt(p * loglog8n(n)) and alpha >= 4)


def _subweibull_lower(q: SRateQuery) -> float:
    """min{s log^{2/alpha}(ep/s), sqrt(p L^omega1)} + L, kept exact.

    At p = s = 1 this is 1 + L, which is of order log log(8n) but not equal to it.
    """
    L = loglog8n(q.n)
    dense = math.sqrt(q.p * L ** omega1(q.p, q.n, q.s))
    return min(q.s * _entropy(q) ** (2 / q.alpha), dense) + L


def _polytail_lower(q: SRateQuery) -> float:
    """Exact formula with the omega2 exponent; at p = s = 1 it is 1 + L."""
    L = loglog8n(q.n)
    dense = q.p ** max(0.5, 2 / q.alpha) * L ** omega2(q.p, q.n, q.s, q.alpha)
    return min(q.s * (q.p / q.s) ** (2 / q.alpha), dense) + L


def gaussian_rate(p: int, n: int, s: int) -> float:
    """(sqrt(pL) ^ s log(e p L / s^2)) v L, the log term used only while s <= sqrt(pL)."""
    L = loglog8n(n)
    dense = math.sqrt(p * L)
    if s <= dense:
        return max(min(dense, s * math.log(math.e * p * L / s**2)), L)
    return max(dense, L)


def _gaussian_sparse(q: SRateQuery) -> float:
    # Gaussian noise is sub-Weibull of order 2
    return q.s * _entropy(q) + loglog8n(q.n)


def _gaussian_star(q: SRateQuery) -> float:
    return gaussian_rate(q.p, q.n, q.s)


def _weak_moment_upper(q: SRateQuery) -> float:
    m = min(q.t0, q.n - q.t0)
    power = (q.alpha - 1) / q.alpha
    iterated = max(math.log(math.log(q.n)), 0.0)
    return math.sqrt(q.p / m) + (q.p / m) ** power + (iterated / m) ** power


def _weak_moment_lower(q: SRateQuery) -> float:
    if q.p != 1:
        raise InvalidArgumentError(detail="weak-moment lower bound is only available for p = 1")
    m = min(q.t0, q.n - q.t0)
    return m ** (-(q.alpha - 1) / q.alpha)


Rule = Callable[[SRateQuery], float]

UPPER: Dict[Tuple[RateFamily, RateRegime], Rule] = {
    (RateFamily.SUBWEIBULL, RateRegime.DENSE_U): _subweibull_dense,
    (RateFamily.SUBWEIBULL, RateRegime.SPARSE_U): _subweibull_sparse,
    (RateFamily.SUBWEIBULL, RateRegime.COMBINED_U): _subweibull_combined,
    (RateFamily.SUBWEIBULL, RateRegime.RESTRICTED_U): _subweibull_restricted,
    (RateFamily.GAUSSIAN, RateRegime.DENSE_U): _subweibull_dense,
    (RateFamily.GAUSSIAN, RateRegime.SPARSE_U): _gaussian_sparse,
    (RateFamily.GAUSSIAN, RateRegime.RESTRICTED_U): _subweibull_restricted,
    (RateFamily.GAUSSIAN, RateRegime.GAUSSIAN_STAR): _gaussian_star,
    (RateFamily.POLYTAIL, RateRegime.DENSE_U): _polytail_dense,
    (RateFamily.POLYTAIL, RateRegime.SPARSE_U): _polytail_sparse,
    (RateFamily.POLYTAIL, RateRegime.SPARSE_MOM_U): _polytail_sparse_mom,
    (RateFamily.POLYTAIL, RateRegime.COMBINED_U): _polytail_combined,
    (RateFamily.POLYTAIL, RateRegime.RESTRICTED_U): _polytail_restricted,
    (RateFamily.POLYTAIL, RateRegime.MULTI_U): _multi_upper,
    (RateFamily.POLYTAIL, RateRegime.TEMPORAL_U): _temporal_upper,
    (RateFamily.WEAK_MOMENT, RateRegime.DENSE_U): _weak_moment_upper,
}

LOWER: Dict[Tuple[RateFamily, RateRegime], Rule] = {
    (RateFamily.SUBWEIBULL, RateRegime.LOWER): _subweibull_lower,
    (RateFamily.GAUSSIAN, RateRegime.LOWER): _gaussian_star,
    (RateFamily.POLYTAIL, RateRegime.LOWER): _polytail_lower,
    (RateFamily.POLYTAIL, RateRegime.MULTI_L): _multi_lower,
    (RateFamily.WEAK_MOMENT, RateRegime.LOWER): _weak_moment_lower,
}


def _rule(table: Dict[Tuple[RateFamily, RateRegime], Rule], q: SRateQuery, kind: str) -> Rule:
    rule = table.get((q.family, q.regime))
    if rule is None:
        raise InvalidArgumentError(
            detail=f"no {kind} rate for family={q.family.value}, regime={q.regime.value}"
        )
    return rule


def rate_upper(q: SRateQuery) -> float:
    return _rule(UPPER, q, "upper")(q)


def rate_lower(q: SRateQuery) -> float:
    return _rule(LOWER, q, "lower")(q)


def sparsity_boundary(family: RateFamily, p: float, alpha: float) -> float:
    family = RateFamily(family)
    if p <= 0:
        raise InvalidArgumentError(detail=f"p must be positive, got {p}")
    if family == RateFamily.SUBWEIBULL:
        if not 0 < alpha <= 2:
            raise InvalidArgumentError(detail=f"subweibull boundary needs alpha in (0, 2], got {alpha}")
        return math.sqrt(p) / math.log(math.e * p) ** (2 / alpha)
    if family == RateFamily.GAUSSIAN:
        return math.sqrt(p) / math.log(math.e * p)
    if family == RateFamily.POLYTAIL:
        return p ** (0.5 - gamma_curve(alpha))
    raise InvalidArgumentError(detail=f"no sparsity boundary for family {family.value}")


def gamma_curve(alpha: float) -> float:
    if alpha < 2:
        raise InvalidArgumentError(detail=f"gamma(alpha) needs alpha >= 2, got {alpha}")
    if alpha == 2:
        return 0.5
    return min(1 / (alpha - 2), 0.5)


def beta_curve(alpha: float) -> float:
    if alpha <= 0:
        raise InvalidArgumentError(detail=f"beta(alpha) needs alpha > 0, got {alpha}")
    return 2 / alpha


def phase_curves(alpha_grid: Iterable[float]) -> List[SPhasePoint]:
    rows = []
    for alpha in alpha_grid:
        rows.append(SPhasePoint(alpha=alpha, curve_id=Curve.BETA, value=beta_curve(alpha)))
        if alpha >= 2:
            rows.append(SPhasePoint(alpha=alpha, curve_id=Curve.GAMMA, value=gamma_curve(alpha)))
    return rows


def alpha_grid(alpha_min: float, alpha_max: float, step: float) -> List[float]:
    if step <= 0 or alpha_max < alpha_min or alpha_min <= 0:
        raise InvalidArgumentError(
            detail=f"invalid alpha grid [{alpha_min}, {alpha_max}] with step {step}"
        )
    count = int(math.floor((alpha_max - alpha_min) / step + 1e-9)) + 1
    return [round(alpha_min + k * step, 12) for k in range(count)]


def minimax_bracket(q: SRateQuery) -> Tuple[float, float]:
    """Endpoints of the unresolved factor: L = 1 and L at its maximum."""
    L = loglog8n(q.n)
    if q.family == RateFamily.SUBWEIBULL:
        core = min(math.sqrt(q.p), q.s * _entropy(q) ** (2 / q.alpha))
        return core + L, math.sqrt(L) * core + L
    if q.family == RateFamily.POLYTAIL:
        core = min(q.p ** max(0.5, 2 / q.alpha), q.s * (q.p / q.s) ** (2 / q.alpha))
        return core + L, L * core + L
    if q.family == RateFamily.GAUSSIAN:
        value = gaussian_rate(q.p, q.n, q.s)
        return value, value
    raise InvalidArgumentError(detail=f"no minimax bracket for family {q.family.value}")
