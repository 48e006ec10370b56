"""Univariate robust means, sparse covers, RSM and geometric median-of-means."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.core.enums import RobustStrategy, RsmMode
from src.exception.client_exception import InvalidArgumentError
from src.exception.server_exception import ResourceLimitError
from src.service import robust_mean


def _shortest_window_midpoint(x: np.ndarray, k: int) -> float:
    ordered = sorted(x)
    best = None
    for i in range(len(ordered) - k + 1):
        width = ordered[i + k - 1] - ordered[i]
        if best is None or width < best[0]:
            best = (width, 0.5 * (ordered[i] + ordered[i + k - 1]))
    return best[1]


class TestRobust1d:
    def test_single_outlier(self) -> None:
        assert robust_mean.robust_1d([0, 0, 0, 0, 100], 0.1) == 0.0

    def test_median_of_means(self) -> None:
        value = robust_mean.robust_1d(
            range(1, 10), 0.1, RobustStrategy.MEDIAN_OF_MEANS, n_groups=3
        )
        assert value == 5.0

    def test_trimmed_mean_ignores_outlier(self) -> None:
        x = [1.0] * 20 + [1e6]
        assert robust_mean.robust_1d(x, 0.01, RobustStrategy.TRIMMED_MEAN) == pytest.approx(1.0)

    @pytest.mark.parametrize("strategy", list(RobustStrategy))
    def test_translation_equivariance(self, strategy: RobustStrategy, rng: np.random.Generator) -> None:
        for _ in range(1000):
            x = rng.standard_t(2.5, size=int(rng.integers(2, 200)))
            shift = float(rng.uniform(-50.0, 50.0))
            delta = float(rng.uniform(0.01, 0.5))
            expected = robust_mean.robust_1d(x, delta, strategy) + shift
            assert robust_mean.robust_1d(x + shift, delta, strategy) == pytest.approx(expected, abs=1e-9)

    def test_matches_window_oracle(self, rng: np.random.Generator) -> None:
        for _ in range(1000):
            n = int(rng.integers(2, 51))
            delta = float(rng.uniform(0.01, 0.9))
            x = rng.standard_cauchy(n)
            k = math.ceil(n * (1 - min(1 / 3, math.log(1 / delta) / n)))
            expected = _shortest_window_midpoint(x, k)
            assert robust_mean.robust_1d(x, delta) == pytest.approx(expected)

    def test_columns_match_scalar(self, rng: np.random.Generator) -> None:
        P = rng.standard_t(3, size=(30, 12))
        columns = robust_mean._robust_1d_columns(P, 0.1, RobustStrategy.SHORTEST_INTERVAL)
        expected = [robust_mean.robust_1d(P[:, j], 0.1) for j in range(12)]
        assert columns == pytest.approx(expected)

    def test_empty(self) -> None:
        with pytest.raises(InvalidArgumentError):
            robust_mean.robust_1d([], 0.1)

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.5])
    def test_delta_range(self, delta: float) -> None:
        with pytest.raises(InvalidArgumentError):
            robust_mean.robust_1d([1.0, 2.0], delta)


class TestSphereNet:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_covers_sphere(self, k: int) -> None:
        net = robust_mean.sphere_net(k)
        assert np.allclose(np.linalg.norm(net, axis=1), 1.0)
        points = np.random.default_rng(99).normal(size=(10_000, k))
        points /= np.linalg.norm(points, axis=1, keepdims=True)
        dist = np.min(np.linalg.norm(points[:, None, :] - net[None, :, :], axis=2), axis=1)
        assert dist.max() <= robust_mean.COVER_RADIUS

    def test_deterministic(self) -> None:
        robust_mean.sphere_net.cache_clear()
        first = robust_mean.sphere_net(3).copy()
        robust_mean.sphere_net.cache_clear()
        assert np.array_equal(first, robust_mean.sphere_net(3))


class TestSparseCover:
    def test_small_cover(self) -> None:
        cover = robust_mean.sparse_cover(4, 1)
        assert len(cover.supports) == 6
        assert cover.complete
        assert np.allclose(np.linalg.norm(cover.vectors, axis=1), 1.0)
        assert np.all(np.count_nonzero(cover.vectors, axis=1) <= 2)

    def test_support_capped_at_p(self) -> None:
        cover = robust_mean.sparse_cover(3, 2)
        assert cover.supports == ((0, 1, 2),)

    def test_budget_without_fallback(self) -> None:
        with pytest.raises(ResourceLimitError):
            robust_mean.sparse_cover(30, 3, budget=10, fallback=False)

    def test_budget_with_fallback(self) -> None:
        cover = robust_mean.sparse_cover(30, 1, budget=20, fallback=True)
        assert not cover.complete
        assert 1 <= len(cover.supports) <= 20

    def test_budget_from_settings(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("HEAVYTAIL_CPT_COVER_BUDGET", "5")
        monkeypatch.setenv("HEAVYTAIL_CPT_COVER_FALLBACK", "false")
        with pytest.raises(ResourceLimitError):
            robust_mean.sparse_cover(12, 1)

    def test_sparsity_range(self) -> None:
        with pytest.raises(InvalidArgumentError):
            robust_mean.sparse_cover(3, 4)


class TestRsm:
    @pytest.mark.parametrize("mode", list(RsmMode))
    def test_fixed_point(self, mode: RsmMode) -> None:
        mu = np.array([3.0, 0.0, 0.0, 0.0])
        fit = robust_mean.rsm_fit(np.tile(mu, (20, 1)), 1, 0.1, mode)
        np.testing.assert_allclose(fit.mu, mu, atol=1e-8)
        assert fit.objective == pytest.approx(0.0, abs=1e-8)
        assert fit.support == (0,)

    def test_zeros(self) -> None:
        np.testing.assert_allclose(
            robust_mean.rsm_estimate(np.zeros((10, 5)), 2, 0.1), np.zeros(5), atol=1e-12
        )

    def test_estimate_is_sparse(self, rng: np.random.Generator) -> None:
        mu = robust_mean.rsm_estimate(rng.normal(size=(50, 6)), 1, 0.1)
        assert np.count_nonzero(mu) <= 1

    def test_objective_is_lipschitz(self, rng: np.random.Generator) -> None:
        Z = rng.normal(size=(40, 5))
        cover = robust_mean.sparse_cover(5, 1)
        targets = robust_mean.rsm_targets(Z, 1, 0.1, cover, RobustStrategy.SHORTEST_INTERVAL)
        for _ in range(200):
            a, b = rng.normal(size=5), rng.normal(size=5)
            gap = abs(
                robust_mean.rsm_objective(a, targets, cover)
                - robust_mean.rsm_objective(b, targets, cover)
            )
            assert gap <= np.linalg.norm(a - b) + 1e-12

    def test_exact_budget(self) -> None:
        with pytest.raises(ResourceLimitError):
            robust_mean.rsm_fit(np.zeros((10, 6)), 1, 0.1, RsmMode.EXACT_SMALL, budget=10)

    def test_eta_range(self) -> None:
        with pytest.raises(InvalidArgumentError):
            robust_mean.rsm_fit(np.zeros((10, 3)), 1, 1.5)

    @pytest.mark.slow
    def test_subgradient_close_to_exact(self) -> None:
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = int(rng.integers(2, 7))
            s = int(rng.integers(1, min(2, p // 2) + 1))
            t = int(rng.integers(16, 65))
            shift = np.zeros(p)
            shift[rng.choice(p, s, replace=False)] = rng.normal(scale=2.0, size=s)
            Z = rng.standard_t(3, size=(t, p)) + shift
            exact = robust_mean.rsm_fit(Z, s, 0.1, RsmMode.EXACT_SMALL)
            approx = robust_mean.rsm_fit(Z, s, 0.1, RsmMode.SUBGRADIENT)
            upsilon = math.sqrt(s * math.log(math.e * p / s) / t)
            assert exact.objective <= approx.objective + 1e-7
            assert approx.objective <= exact.objective + upsilon


class TestGeoMom:
    def test_identical_vectors(self) -> None:
        Z = np.tile([1.0, -2.0, 0.5], (24, 1))
        np.testing.assert_allclose(robust_mean.geo_mom_mean(Z, 0.1), [1.0, -2.0, 0.5])

    def test_majority_point(self) -> None:
        Z = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(robust_mean.geo_mom_mean(Z, 0.5, n_groups=3), [0.0, 0.0])

    def test_translation_equivariance(self, rng: np.random.Generator) -> None:
        for _ in range(1000):
            t, p = int(rng.integers(20, 81)), int(rng.integers(1, 7))
            Z = rng.standard_t(2.5, size=(t, p))
            shift = rng.uniform(-20.0, 20.0, size=p)
            np.testing.assert_allclose(
                robust_mean.geo_mom_mean(Z + shift, 0.1),
                robust_mean.geo_mom_mean(Z, 0.1) + shift,
                atol=1e-6,
            )

    def test_weiszfeld_matches_minimizer(self, rng: np.random.Generator) -> None:
        points = rng.normal(size=(7, 3))
        y = robust_mean._weiszfeld(points)
        objective = lambda c: np.linalg.norm(points - c, axis=1).sum()
        for _ in range(100):
            assert objective(y) <= objective(y + 1e-3 * rng.normal(size=3)) + 1e-9

    def test_too_few_samples(self) -> None:
        with pytest.raises(InvalidArgumentError):
            robust_mean.geo_mom_mean(np.zeros((2, 3)), 0.1)


class TestContract:
    def test_forms(self) -> None:
        assert robust_mean.contract_for("rsm:exact", 0.1).bound_form == "sparse"
        assert robust_mean.contract_for("geo-mom", 0.1).bound_form == "weak-moment"
        with pytest.raises(InvalidArgumentError):
            robust_mean.contract_for("mean", 0.1)

    def test_sparse_bound_value(self) -> None:
        bound = robust_mean.contract_for("rsm:subgradient", 0.1).deviation_bound(p=10, n=100, s=2)
        assert bound == pytest.approx(math.sqrt(2 * math.log(5 * math.e) / 100) + math.sqrt(math.log(10) / 100))

    def test_geo_mom_spot_check(self, rng: np.random.Generator) -> None:
        contract = robust_mean.contract_for("geo-mom", 0.1)
        bound = contract.deviation_bound(p=10, n=400, alpha=2.0)
        errors = [
            np.linalg.norm(robust_mean.geo_mom_mean(rng.normal(size=(400, 10)), contract.eta))
            for _ in range(20)
        ]
        assert np.mean(np.array(errors) <= bound) >= 1 - contract.eta - 0.05
