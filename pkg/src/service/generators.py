import logging
import math
import zlib
from functools import lru_cache
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy import integrate, stats
from scipy.special import gamma as gamma_fn, gammaln

from src.core.enums import AdversarialClaim, NoiseFamily, SignalKind
from src.exception.client_exception import InvalidArgumentError
from src.schemas.matrix import SDataMatrix
from src.schemas.scenario import SMA1Spec, SNoiseSpec, SSignalSpec

logger = logging.getLogger(__name__)

WEAK_MOMENT_TARGET = 0.99


def make_rng(seed: int, replicate: int = 0, purpose: str = "noise") -> np.random.Generator:
    """Counter-based stream keyed by (seed, replicate, purpose)."""
    key = np.random.SeedSequence([int(seed), int(replicate), zlib.crc32(purpose.encode())])
    return np.random.Generator(np.random.Philox(key))


def _signs(rng: np.random.Generator, size) -> np.ndarray:
    return rng.integers(0, 2, size=size) * 2.0 - 1.0


def _student_abs_moment(df: float, alpha: float) -> float:
    # E|T|^alpha for T ~ t(df), alpha < df
    log_m = (
        0.5 * alpha * math.log(df)
        + gammaln((alpha + 1) / 2)
        + gammaln((df - alpha) / 2)
        - 0.5 * math.log(math.pi)
        - gammaln(df / 2)
    )
    return math.exp(log_m)


def _sphere_abs_moment(p: int, alpha: float) -> float:
    # E|<U, v>|^alpha for U uniform on the unit sphere of R^p
    return math.exp(
        gammaln(p / 2)
        + gammaln((alpha + 1) / 2)
        - 0.5 * math.log(math.pi)
        - gammaln((p + alpha) / 2)
    )


@lru_cache(maxsize=256)
def _radial_scale(p: int, alpha: float, tail_index: float) -> float:
    radial_moment = stats.pareto(b=tail_index).expect(lambda x: x**alpha)
    projected = radial_moment * p ** (alpha / 2) * _sphere_abs_moment(p, alpha)
    return (WEAK_MOMENT_TARGET / projected) ** (1 / alpha)


def _aux_cdf_positive(y: np.ndarray) -> np.ndarray:
    # CDF of |xi_aux| on [0.9, 1.1]; piecewise integral of the quadratic density, total mass 1
    y = np.clip(y, 0.9, 1.1)
    left = 1000 * (np.minimum(y, 0.95) - 0.9) ** 3 / 3
    mid_hi = np.clip(y, 0.95, 1.05)
    mid = 5 * (mid_hi - 0.95) - 1000 * ((mid_hi - 1) ** 3 - (-0.05) ** 3) / 3
    right_hi = np.clip(y, 1.05, 1.1)
    right = 1000 * ((right_hi - 1.1) ** 3 - (-0.05) ** 3) / 3
    return 2 * (left + mid + right)


def _aux_density(x: float) -> float:
    y = abs(x)
    if 0.9 <= y < 0.95:
        return 1000 * (y - 0.9) ** 2
    if 0.95 <= y <= 1.05:
        return 5 - 1000 * (y - 1) ** 2
    if 1.05 < y <= 1.1:
        return 1000 * (y - 1.1) ** 2
    return 0.0


@lru_cache(maxsize=1)
def aux_sigma() -> float:
    second, _ = integrate.quad(lambda x: x * x * _aux_density(x), 0.9, 1.1, points=[0.95, 1.05])
    return math.sqrt(2 * second)


@lru_cache(maxsize=1)
def _aux_quantile_grid():
    grid = np.linspace(0.9, 1.1, 20001)
    return _aux_cdf_positive(grid), grid


def _sample_aux(rng: np.random.Generator, size) -> np.ndarray:
    cdf, grid = _aux_quantile_grid()
    magnitude = np.interp(rng.random(size), cdf, grid)
    return _signs(rng, size) * magnitude


def adversarial_gamma_max(p: int, s: int) -> float:
    return math.sqrt(p / s)


def adversarial_gamma(
    claim: Union[AdversarialClaim, str], p: int, s: int, alpha: float, K: float = 2.0
) -> float:
    """Default gamma of each construction."""
    claim = AdversarialClaim(claim)
    if claim == AdversarialClaim.III:
        if alpha == 2:
            return math.sqrt(p / s)
        head = ((K**alpha - 1) * p / s) ** (1 / alpha) / max(32.0, K)
        return max(-1 + head, math.sqrt(2) / 32)
    if claim == AdversarialClaim.IV:
        return (p / s) ** (1 / alpha) / 12
    if claim == AdversarialClaim.V:
        return math.log(math.e * p / s) ** (1 / alpha) / (3 * (8 / alpha) ** (1 / alpha))
    raise InvalidArgumentError(detail="G2-two-point has no gamma parameter")


def _claim_iii_law(gamma: float, s: int, p: int, t0: float):
    q = 1.0 / (1.0 + gamma**2 * s / (2 * p))
    if t0 <= 1:
        raise InvalidArgumentError(detail=f"claim iii needs t0 > 1, got {t0}")
    inner = (t0**2 - 1) / (2 * (t0**2 - q))
    outer = (1 - q) / (2 * (t0**2 - q))
    values = np.array([math.sqrt(q), -math.sqrt(q), t0, -t0])
    probs = np.array([inner, inner, outer, outer])
    return values, probs / probs.sum()


def claim_iii_moments(gamma: float, s: int, p: int, t0: Optional[float] = None):
    """Exact mean and variance of the claim-iii law."""
    t0 = max(32 * gamma, math.sqrt(2)) if t0 is None else t0
    values, probs = _claim_iii_law(gamma, s, p, t0)
    return float(values @ probs), float(values**2 @ probs)


def gen_adversarial(
    claim: Union[AdversarialClaim, str],
    params: Dict[str, Any],
    p: int,
    n: int,
    rng: Optional[np.random.Generator] = None,
    alpha: float = 4.0,
) -> SDataMatrix:
    claim = AdversarialClaim(claim)
    rng = rng if rng is not None else make_rng(int(params.get("seed", 0)), 0, "adversarial")
    s = int(params.get("s", 30 if claim == AdversarialClaim.III else 1))
    layout = params.get("layout", "iid")
    side = params.get("side", "plus" if claim == AdversarialClaim.G2_TWO_POINT else "xi")

    if claim == AdversarialClaim.G2_TWO_POINT:
        if "u" in params:
            u = float(params["u"])
        else:
            u = 1.0 / (2.0 * float(params.get("t0", 1)))
        c = float(params.get("c", (2 * u) ** (-1 / alpha)))
        if not 0 <= u <= 1 or c <= 0:
            raise InvalidArgumentError(detail=f"G2-two-point needs u in [0, 1] and c > 0, got u={u}, c={c}")
        atom = c if side == "plus" else -c
        values = np.where(rng.random((p, n)) < u, atom, 0.0)
        return SDataMatrix(values=values)

    if s > p:
        raise InvalidArgumentError(detail=f"construction sparsity s={s} exceeds p={p}")
    gamma = float(params["gamma"]) if "gamma" in params else adversarial_gamma(
        claim, p, s, alpha, float(params.get("K", 2.0))
    )
    if gamma > adversarial_gamma_max(p, s) * (1 + 1e-12):
        raise InvalidArgumentError(
            detail=f"gamma={gamma} violates gamma <= sqrt(p/s)={adversarial_gamma_max(p, s)}"
        )
    q = 1.0 / (1.0 + gamma**2 * s / (2 * p))
    shape = (p, n) if layout == "iid" else (p, 1)

    if claim == AdversarialClaim.III:
        if side == "xi":
            t0 = float(params.get("t0", max(32 * gamma, math.sqrt(2))))
            values, probs = _claim_iii_law(gamma, s, p, t0)
            draws = rng.choice(values, size=shape, p=probs)
        else:
            draws = math.sqrt(q) * _signs(rng, shape)
    else:
        draws = _sample_aux(rng, shape) / aux_sigma()
        if side != "xi":
            draws = math.sqrt(q) * draws

    if side == "pi":
        hit = rng.random(shape) < s * q / (2 * p)
        draws = draws + gamma * np.where(hit, _signs(rng, shape), 0.0)

    if layout != "iid":
        filler = _signs(rng, (p, n - 1))
        draws = np.concatenate([draws, filler], axis=1)
    return SDataMatrix(values=draws)


def gen_noise(
    spec: SNoiseSpec, p: int, n: int, rng: Optional[np.random.Generator] = None
) -> SDataMatrix:
    rng = rng if rng is not None else make_rng(spec.seed, 0, "noise")
    family, alpha = spec.family, spec.alpha
    size = (p, n)

    if family == NoiseFamily.GAUSSIAN:
        values = rng.standard_normal(size)
    elif family == NoiseFamily.SUBWEIBULL:
        values = _signs(rng, size) * rng.weibull(alpha, size) / math.sqrt(gamma_fn(1 + 2 / alpha))
    elif family == NoiseFamily.POLYTAIL_STUDENT:
        df = spec.tail_parameter
        values = rng.standard_t(df, size) * math.sqrt((df - 2) / df)
    elif family == NoiseFamily.POLYTAIL_PARETO:
        b = spec.tail_parameter
        values = _signs(rng, size) * (rng.pareto(b, size) + 1.0) / math.sqrt(b / (b - 2))
    elif family == NoiseFamily.WEAK_MOMENT_SPHERICAL:
        b = spec.tail_parameter
        directions = rng.standard_normal(size)
        directions /= np.linalg.norm(directions, axis=0, keepdims=True)
        radii = _radial_scale(p, alpha, b) * (rng.pareto(b, n) + 1.0)
        values = radii * math.sqrt(p) * directions
    else:
        claim = spec.extra["claim"]
        values = gen_adversarial(claim, spec.extra, p, n, rng=rng, alpha=alpha).values

    if spec.scale != 1.0:
        values = values * spec.scale
    return SDataMatrix(values=values)


def noise_class_constant(spec: SNoiseSpec, p: Optional[int] = None) -> float:
    """Achieved K of the generated law (psi_alpha norm or alpha-th moment root)."""
    family, alpha = spec.family, spec.alpha
    if family == NoiseFamily.GAUSSIAN:
        return math.sqrt(8 / 3)
    if family == NoiseFamily.SUBWEIBULL:
        return 2 ** (1 / alpha) / math.sqrt(gamma_fn(1 + 2 / alpha))
    if family == NoiseFamily.POLYTAIL_STUDENT:
        df = spec.tail_parameter
        moment = _student_abs_moment(df, alpha) * ((df - 2) / df) ** (alpha / 2)
        return moment ** (1 / alpha)
    if family == NoiseFamily.POLYTAIL_PARETO:
        b = spec.tail_parameter
        return (b / (b - alpha) * ((b - 2) / b) ** (alpha / 2)) ** (1 / alpha)
    if family == NoiseFamily.WEAK_MOMENT_SPHERICAL:
        return WEAK_MOMENT_TARGET ** (1 / alpha)
    claim = AdversarialClaim(spec.extra["claim"])
    if claim == AdversarialClaim.III:
        s = int(spec.extra.get("s", 30))
        p = p if p is not None else s
        gamma = float(spec.extra.get("gamma", math.sqrt(p / s)))
        t0 = float(spec.extra.get("t0", max(32 * gamma, math.sqrt(2))))
        values, probs = _claim_iii_law(gamma, s, p, t0)
        return float(np.abs(values) ** alpha @ probs) ** (1 / alpha)
    if claim == AdversarialClaim.G2_TWO_POINT:
        u = float(spec.extra.get("u", 0.5))
        c = float(spec.extra.get("c", (2 * u) ** (-1 / alpha)))
        return (c**alpha * u) ** (1 / alpha)
    return 1.1 / aux_sigma()


def gen_ma1(
    spec: SMA1Spec, p: int, n: int, rng: Optional[np.random.Generator] = None
) -> SDataMatrix:
    rng = rng if rng is not None else make_rng(spec.seed, 0, "ma1")
    innovations = gen_noise(spec.innovation, p, n + 1, rng=rng).values
    omega = innovations / math.sqrt(1 + spec.pi_ma**2)
    return SDataMatrix(values=omega[:, 1:] + spec.pi_ma * omega[:, :-1])


def signal_strength(spec: SSignalSpec) -> float:
    """rho^2 = t0 (n - t0) / n * ||delta||^2 for a single change, 0 otherwise."""
    if spec.kind != SignalKind.SINGLE_CHANGE:
        return 0.0
    delta = np.asarray(spec.delta, dtype=float)
    return spec.t0 * (spec.n - spec.t0) / spec.n * float(delta @ delta)


def alternative_for_rho(
    p: int,
    n: int,
    t0: int,
    rho: float,
    s: Optional[int] = None,
    direction: Optional[np.ndarray] = None,
) -> SSignalSpec:
    if direction is None:
        k = p if s is None else s
        direction = np.zeros(p)
        direction[:k] = 1.0
    direction = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(direction))
    if norm == 0:
        raise InvalidArgumentError(detail="alternative direction must be nonzero")
    if rho == 0:
        return SSignalSpec(kind=SignalKind.NULL, p=p, n=n)
    scale = rho / math.sqrt(t0 * (n - t0) / n) / norm
    return SSignalSpec(
        kind=SignalKind.SINGLE_CHANGE,
        p=p,
        n=n,
        t0=t0,
        delta=(scale * direction).tolist(),
        s=s,
    )


def gen_theta(spec: SSignalSpec) -> SDataMatrix:
    p, n = spec.p, spec.n
    base = np.zeros(p) if spec.base is None else np.asarray(spec.base, dtype=float)
    theta = np.repeat(base[:, None], n, axis=1)
    if spec.kind == SignalKind.SINGLE_CHANGE:
        theta[:, : spec.t0] += np.asarray(spec.delta, dtype=float)[:, None]
    elif spec.kind == SignalKind.MULTI_CHANGE:
        edges = [0, *spec.taus, n]
        for mean, lo, hi in zip(spec.means, edges, edges[1:]):
            theta[:, lo:hi] = np.asarray(mean, dtype=float)[:, None]
    return SDataMatrix(values=theta)


def gen_dataset(
    signal: SSignalSpec,
    noise: Union[SNoiseSpec, SMA1Spec],
    rng: Optional[np.random.Generator] = None,
) -> SDataMatrix:
    theta = gen_theta(signal).values
    if isinstance(noise, SMA1Spec):
        errors = gen_ma1(noise, signal.p, signal.n, rng=rng).values
    else:
        errors = gen_noise(noise, signal.p, signal.n, rng=rng).values
    if errors.shape != theta.shape:
        raise InvalidArgumentError(detail=f"noise shape {errors.shape} != signal shape {theta.shape}")
    return SDataMatrix(values=theta + errors)
