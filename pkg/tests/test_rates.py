"""Closed-form rates, sparsity boundaries and phase curves."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.core.enums import Curve, RateFamily, RateRegime
from src.exception.client_exception import InvalidArgumentError
from src.schemas.rates import SRateQuery
from src.service import rates
from src.service.core_model import loglog8n


def query(family: RateFamily, regime: RateRegime, **kwargs) -> SRateQuery:
    return SRateQuery(family=family, regime=regime, **kwargs)


class TestRateUpper:
    def test_polytail_dense(self) -> None:
        q = query(RateFamily.POLYTAIL, RateRegime.DENSE_U, p=16, n=8, alpha=4.0)
        assert rates.rate_upper(q) == pytest.approx(4 * math.log(math.log(64)))
        assert rates.rate_upper(q) == pytest.approx(5.700, abs=1e-3)

    @pytest.mark.parametrize("p", [1, 5, 40])
    def test_subweibull_sparse_full_support(self, p: int) -> None:
        q = query(RateFamily.SUBWEIBULL, RateRegime.SPARSE_U, p=p, n=100, s=p, alpha=2.0)
        assert rates.rate_upper(q) == pytest.approx(p + loglog8n(100))

    def test_multi(self) -> None:
        q = query(RateFamily.POLYTAIL, RateRegime.MULTI_U, p=4, n=22026, alpha=4.0)
        assert rates.rate_upper(q) == pytest.approx(20.0, abs=1e-3)

    def test_subweibull_dense(self) -> None:
        L = loglog8n(500)
        q = query(RateFamily.SUBWEIBULL, RateRegime.DENSE_U, p=30, n=500, alpha=1.0)
        assert rates.rate_upper(q) == pytest.approx(math.sqrt(30 * L) + L)

    def test_polytail_sparse_mom(self) -> None:
        L = loglog8n(256)
        q = query(RateFamily.POLYTAIL, RateRegime.SPARSE_MOM_U, p=64, n=256, s=4, alpha=4.0)
        assert rates.rate_upper(q) == pytest.approx(4 * (4.0 + L))

    def test_restricted(self) -> None:
        L = loglog8n(256)
        entropy = math.log(math.e * 64)
        polytail = query(RateFamily.POLYTAIL, RateRegime.RESTRICTED_U, p=256, n=256, s=4, alpha=4.0)
        subweibull = query(RateFamily.SUBWEIBULL, RateRegime.RESTRICTED_U, p=256, n=256, s=4, alpha=2.0)
        assert rates.rate_upper(polytail) == pytest.approx(4 * (entropy + L))
        assert rates.rate_upper(subweibull) == pytest.approx(4 * entropy + L)

    def test_gaussian_sparse(self) -> None:
        L = loglog8n(512)
        q = query(RateFamily.GAUSSIAN, RateRegime.SPARSE_U, p=100, n=512, s=5)
        assert rates.rate_upper(q) == pytest.approx(5 * math.log(20 * math.e) + L)
        matching = query(RateFamily.SUBWEIBULL, RateRegime.SPARSE_U, p=100, n=512, s=5, alpha=2.0)
        assert rates.rate_upper(q) == pytest.approx(rates.rate_upper(matching))

    def test_sparse_polytail_needs_alpha_four(self) -> None:
        q = query(RateFamily.POLYTAIL, RateRegime.SPARSE_U, p=64, n=256, s=2, alpha=3.0)
        with pytest.raises(InvalidArgumentError):
            rates.rate_upper(q)

    def test_unknown_regime(self) -> None:
        q = query(RateFamily.GAUSSIAN, RateRegime.SPARSE_MOM_U, p=4, n=64)
        with pytest.raises(InvalidArgumentError):
            rates.rate_upper(q)

    def test_weak_moment(self) -> None:
        q = query(RateFamily.WEAK_MOMENT, RateRegime.DENSE_U, p=4, n=200, alpha=1.5, t0=50)
        power = 0.5 / 1.5
        expected = math.sqrt(4 / 50) + (4 / 50) ** power + (math.log(math.log(200)) / 50) ** power
        assert rates.rate_upper(q) == pytest.approx(expected)


class TestRateLower:
    def test_subweibull_indicator_off(self) -> None:
        p, n, s, alpha = 400, 1000, 2, 1.0
        L = loglog8n(n)
        assert s <= math.sqrt(p * L)
        q = query(RateFamily.SUBWEIBULL, RateRegime.LOWER, p=p, n=n, s=s, alpha=alpha)
        expected = min(s * math.log(math.e * p / s) ** 2, math.sqrt(p)) + L
        assert rates.rate_lower(q) == pytest.approx(expected)

    def test_polytail_alpha_three(self) -> None:
        p, n = 512, 1000
        for s in (1, 8, 512):
            q = query(RateFamily.POLYTAIL, RateRegime.LOWER, p=p, n=n, s=s, alpha=3.0)
            assert rates.rate_lower(q) == pytest.approx(p ** (2 / 3) + loglog8n(n))

    def test_scalar_problem(self) -> None:
        # one coordinate: the log(e) and sqrt(p) terms are both 1
        L = loglog8n(10**4)
        q = query(RateFamily.SUBWEIBULL, RateRegime.LOWER, p=1, n=10**4, s=1, alpha=2.0)
        assert rates.rate_lower(q) == pytest.approx(1 + L)

    @pytest.mark.parametrize("family, alpha", [(RateFamily.SUBWEIBULL, 2.0), (RateFamily.POLYTAIL, 4.0)])
    @pytest.mark.parametrize("n", [10, 1000, 10**6])
    def test_scalar_problem_order_of_loglog(self, family: RateFamily, alpha: float, n: int) -> None:
        L = loglog8n(n)
        value = rates.rate_lower(query(family, RateRegime.LOWER, p=1, n=n, s=1, alpha=alpha))
        assert L < value <= 2 * L

    def test_indicators(self) -> None:
        assert rates.omega1(4, 1000, 4) == 1
        assert rates.omega1(400, 1000, 4) == 0
        assert rates.omega2(4, 1000, 4, 4.0) == 0.5
        assert rates.omega2(4, 1000, 4, 3.0) == 0.0

    def test_multi(self) -> None:
        q = query(RateFamily.POLYTAIL, RateRegime.MULTI_L, p=9, n=1000, alpha=4.0)
        assert rates.rate_lower(q) == pytest.approx(math.sqrt(9 * math.log(1000)) + math.log(1000))

    def test_weak_moment_scalar_only(self) -> None:
        ok = query(RateFamily.WEAK_MOMENT, RateRegime.LOWER, p=1, n=100, alpha=2.0, t0=25)
        assert rates.rate_lower(ok) == pytest.approx(25 ** -0.5)
        bad = query(RateFamily.WEAK_MOMENT, RateRegime.LOWER, p=2, n=100, alpha=2.0, t0=25)
        with pytest.raises(InvalidArgumentError):
            rates.rate_lower(bad)

    @pytest.mark.parametrize("n", [64, 1024, 10**6])
    def test_gap_at_most_loglog(self, n: int) -> None:
        L = loglog8n(n)
        for p in (1, 16, 256, 4096):
            for s in {1, max(p // 8, 1), p}:
                for alpha in (0.5, 1.0, 2.0):
                    up = rates.rate_upper(query(RateFamily.SUBWEIBULL, RateRegime.COMBINED_U, p=p, n=n, s=s, alpha=alpha))
                    lo = rates.rate_lower(query(RateFamily.SUBWEIBULL, RateRegime.LOWER, p=p, n=n, s=s, alpha=alpha))
                    assert up <= L * lo * (1 + 1e-12)
                for alpha in (2.0, 3.0, 4.0, 6.0):
                    up = rates.rate_upper(query(RateFamily.POLYTAIL, RateRegime.COMBINED_U, p=p, n=n, s=s, alpha=alpha))
                    lo = rates.rate_lower(query(RateFamily.POLYTAIL, RateRegime.LOWER, p=p, n=n, s=s, alpha=alpha))
                    assert up <= L * lo * (1 + 1e-12)


class TestQueryValidation:
    def test_subweibull_alpha(self) -> None:
        with pytest.raises(InvalidArgumentError):
            query(RateFamily.SUBWEIBULL, RateRegime.DENSE_U, p=4, n=64, alpha=3.0)

    def test_polytail_alpha(self) -> None:
        with pytest.raises(InvalidArgumentError):
            query(RateFamily.POLYTAIL, RateRegime.DENSE_U, p=4, n=64, alpha=1.5)

    def test_sparsity_exceeds_dimension(self) -> None:
        with pytest.raises(InvalidArgumentError):
            query(RateFamily.POLYTAIL, RateRegime.DENSE_U, p=4, n=64, s=5, alpha=4.0)

    def test_weak_moment_needs_t0(self) -> None:
        with pytest.raises(InvalidArgumentError):
            query(RateFamily.WEAK_MOMENT, RateRegime.DENSE_U, p=4, n=64, alpha=1.5)


class TestGaussianRate:
    def test_sparse_branch(self) -> None:
        p, n, s = 10_000, 1000, 3
        L = loglog8n(n)
        assert rates.gaussian_rate(p, n, s) == pytest.approx(s * math.log(math.e * p * L / s**2))

    def test_dense_branch(self) -> None:
        p, n = 16, 1000
        L = loglog8n(n)
        assert rates.gaussian_rate(p, n, 16) == pytest.approx(math.sqrt(p * L))

    def test_floor(self) -> None:
        assert rates.gaussian_rate(1, 10**6, 1) >= loglog8n(10**6)


class TestSparsityBoundary:
    def test_polytail_alpha_six(self) -> None:
        assert rates.sparsity_boundary(RateFamily.POLYTAIL, 4096, 6.0) == pytest.approx(8.0)

    @pytest.mark.parametrize("p", [2, 64, 10**5])
    def test_polytail_alpha_four(self, p: int) -> None:
        assert rates.sparsity_boundary(RateFamily.POLYTAIL, p, 4.0) == pytest.approx(1.0)

    def test_subweibull_at_e(self) -> None:
        value = rates.sparsity_boundary(RateFamily.SUBWEIBULL, math.e, 2.0)
        assert value == pytest.approx(math.sqrt(math.e) / 2)

    def test_gaussian(self) -> None:
        assert rates.sparsity_boundary(RateFamily.GAUSSIAN, 100, 2.0) == pytest.approx(
            10 / math.log(100 * math.e)
        )

    @pytest.mark.parametrize("p", [64, 1024, 4096])
    @pytest.mark.parametrize("alpha", [4.0, 5.0, 6.0, 8.0])
    def test_boundary_consistency(self, p: int, alpha: float) -> None:
        s = rates.sparsity_boundary(RateFamily.POLYTAIL, p, alpha)
        dense = p ** max(2 / alpha, 0.5)
        assert abs(s * (p / s) ** (2 / alpha) - dense) / dense <= 1e-9

    @pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0, 3.5, 4.0])
    def test_no_sparse_regime_below_four(self, alpha: float) -> None:
        p = 256
        s = np.arange(1, p + 1, dtype=float)
        assert np.min(s * (p / s) ** (2 / alpha)) >= p ** (2 / alpha) * (1 - 1e-9)

    def test_weak_moment_has_no_boundary(self) -> None:
        with pytest.raises(InvalidArgumentError):
            rates.sparsity_boundary(RateFamily.WEAK_MOMENT, 16, 1.5)


class TestPhaseCurves:
    def test_examples(self) -> None:
        assert rates.gamma_curve(4.0) == 0.5
        assert rates.gamma_curve(6.0) == 0.25
        assert rates.beta_curve(1.0) == 2.0

    @pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 6.0, 10.0])
    def test_gamma_exact(self, alpha: float) -> None:
        assert abs(rates.gamma_curve(alpha) - min(1 / (alpha - 2), 0.5)) <= 1e-12

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_beta_exact(self, alpha: float) -> None:
        assert abs(rates.beta_curve(alpha) - 2 / alpha) <= 1e-12

    def test_gamma_needs_alpha_two(self) -> None:
        with pytest.raises(InvalidArgumentError):
            rates.gamma_curve(1.5)

    def test_rows(self) -> None:
        rows = rates.phase_curves(rates.alpha_grid(2.0, 10.0, 0.5))
        gamma = [r for r in rows if r.curve_id == Curve.GAMMA]
        beta = [r for r in rows if r.curve_id == Curve.BETA]
        assert len(gamma) == 17
        assert len(beta) == 17
        assert gamma[0].alpha == 2.0 and gamma[-1].alpha == 10.0

    def test_beta_only_below_two(self) -> None:
        rows = rates.phase_curves([0.5, 1.0])
        assert {r.curve_id for r in rows} == {Curve.BETA}

    def test_alpha_grid(self) -> None:
        assert rates.alpha_grid(0.5, 2.0, 0.5) == [0.5, 1.0, 1.5, 2.0]
        with pytest.raises(InvalidArgumentError):
            rates.alpha_grid(2.0, 1.0, 0.5)


class TestMinimaxBracket:
    @pytest.mark.parametrize(
        "family, alpha", [(RateFamily.SUBWEIBULL, 1.0), (RateFamily.POLYTAIL, 6.0), (RateFamily.GAUSSIAN, 2.0)]
    )
    def test_ordered(self, family: RateFamily, alpha: float) -> None:
        q = query(family, RateRegime.COMBINED_U, p=100, n=1000, s=3, alpha=alpha)
        low, high = rates.minimax_bracket(q)
        assert low <= high

    def test_gaussian_is_resolved(self) -> None:
        q = query(RateFamily.GAUSSIAN, RateRegime.GAUSSIAN_STAR, p=100, n=1000, s=3)
        low, high = rates.minimax_bracket(q)
        assert low == high == rates.gaussian_rate(100, 1000, 3)
