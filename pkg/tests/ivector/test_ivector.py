"""
Tests for the UBM, sufficient statistics and the total-variability model.
"""
import numpy as np
import pytest
from scipy.optimize import minimize

from ivector.gmm import GmmModel, train_ubm
from ivector.stats import SufficientStats, accumulate_stats
from ivector.tmatrix import TMatrixModel, extract_ivector, train_tmatrix
from utils.error_handler import DimensionMismatchException, InsufficientDataException, ValidationException


def two_cluster_frames(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(-3.0, 0.5, size=(n // 2, 2))
    b = rng.normal(3.0, 0.5, size=(n // 2, 2))
    return np.vstack([a, b])


def utterances(count=24, frames=300, dim=3, seed=0):
    """Utterances drawn around four centres with a per-utterance shift."""
    rng = np.random.default_rng(seed)
    centres = rng.normal(0.0, 3.0, size=(4, dim))
    out = []
    for _ in range(count):
        shift = rng.normal(0.0, 0.5, size=dim)
        labels = rng.integers(0, 4, size=frames)
        out.append(centres[labels] + shift + rng.normal(0.0, 0.4, size=(frames, dim)))
    return out


@pytest.fixture(scope="module")
def ubm():
    return train_ubm(utterances(), C=4, iters=5, seed=1)


class TestUbm:
    """Tests for GMM-UBM training."""

    def test_recovers_two_clusters(self):
        """Test EM finds both cluster means."""
        model = train_ubm([two_cluster_frames()], C=2, iters=10, seed=0)

        means = np.sort(model.means[:, 0])
        np.testing.assert_allclose(means, [-3.0, 3.0], atol=0.1)
        np.testing.assert_allclose(model.weights, [0.5, 0.5], atol=0.02)
        assert model.weights.sum() == pytest.approx(1.0)

    def test_single_component_is_global_gaussian(self):
        x = np.random.default_rng(8).normal(1.0, 2.0, size=(400, 3))

        model = train_ubm([x], C=1, iters=1, seed=0)

        np.testing.assert_array_equal(model.weights, [1.0])
        np.testing.assert_allclose(model.means[0], x.mean(axis=0), rtol=1e-10)
        np.testing.assert_allclose(model.variances[0], x.var(axis=0), rtol=1e-9)

    def test_log_likelihood_non_decreasing(self):
        """Test the EM log-likelihood never decreases."""
        history = []
        train_ubm(utterances(), C=4, iters=6, seed=2, on_iteration=lambda i, ll: history.append(ll))

        assert len(history) == 7
        assert all(b >= a - 1e-6 * abs(a) for a, b in zip(history, history[1:]))

    def test_deterministic(self):
        a = train_ubm(utterances(), C=4, iters=3, seed=5)
        b = train_ubm(utterances(), C=4, iters=3, seed=5)
        np.testing.assert_array_equal(a.means, b.means)

    def test_variance_floor(self):
        frames = two_cluster_frames()
        model = train_ubm([frames], C=2, iters=3, seed=0, variance_floor=0.5)
        assert np.all(model.variances >= 0.5 * frames.var(axis=0) - 1e-12)

    def test_insufficient_frames(self):
        with pytest.raises(InsufficientDataException):
            train_ubm([np.zeros((100, 2))], C=4, iters=1, seed=0)

    def test_posteriors_sum_to_one(self, ubm):
        gamma = ubm.posteriors(utterances(count=1)[0])
        np.testing.assert_allclose(gamma.sum(axis=1), 1.0)

    def test_dimension_mismatch(self, ubm):
        with pytest.raises(DimensionMismatchException):
            ubm.posteriors(np.zeros((10, 5)))

    def test_payload(self, ubm):
        meta, arrays = ubm.to_payload()
        restored = GmmModel.from_payload(meta, arrays)

        assert meta == {"C": 4, "F": 3}
        np.testing.assert_array_equal(restored.variances, ubm.variances)


class TestStats:
    """Tests for Baum-Welch statistics."""

    def test_occupancy_sums_to_frames(self, ubm):
        x = utterances(count=1, frames=123)[0]
        stats = accumulate_stats(x, ubm)

        assert stats.num_frames == pytest.approx(123.0)
        np.testing.assert_allclose(stats.f.sum(axis=0), x.sum(axis=0))
        np.testing.assert_allclose(stats.centered(ubm), stats.f - stats.n[:, None] * ubm.means)

    def test_matches_per_frame_loop(self, ubm):
        x = utterances(count=1, frames=40, seed=4)[0]
        n = np.zeros(ubm.num_components)
        f = np.zeros_like(ubm.means)
        for frame in x:
            log_p = np.array([
                np.log(ubm.weights[c]) - 0.5 * np.sum(
                    np.log(2 * np.pi * ubm.variances[c]) + (frame - ubm.means[c]) ** 2 / ubm.variances[c])
                for c in range(ubm.num_components)
            ])
            gamma = np.exp(log_p - log_p.max())
            gamma /= gamma.sum()
            n += gamma
            f += gamma[:, None] * frame

        stats = accumulate_stats(x, ubm)

        np.testing.assert_allclose(stats.n, n, atol=1e-10)
        np.testing.assert_allclose(stats.f, f, atol=1e-10)

    def test_single_frame(self, ubm):
        x = utterances(count=1, frames=1, seed=5)[0]
        stats = accumulate_stats(x, ubm)

        np.testing.assert_allclose(stats.f, stats.n[:, None] * x[0])

    def test_affine_consistency(self, ubm):
        """Test scaling features with a matching UBM keeps the posteriors."""
        x = utterances(count=1, frames=80, seed=6)[0]
        a = 2.5
        scaled_ubm = GmmModel(ubm.weights, a * ubm.means, a ** 2 * ubm.variances)

        stats = accumulate_stats(x, ubm)
        scaled = accumulate_stats(a * x, scaled_ubm)

        np.testing.assert_allclose(scaled.n, stats.n, atol=1e-10)
        np.testing.assert_allclose(scaled.f, a * stats.f, atol=1e-9)


class TestTMatrix:
    """Tests for T-matrix training and i-vector extraction."""

    @pytest.fixture(scope="class")
    def stats(self, ubm):
        return [accumulate_stats(x, ubm) for x in utterances(seed=3)]

    def test_objective_non_decreasing(self, ubm, stats):
        """Test the EM objective never decreases."""
        history = []
        model = train_tmatrix(stats, ubm, D=4, iters=5, seed=0,
                              on_iteration=lambda i, v: history.append(v))

        assert model.T.shape == (12, 4)
        assert len(history) == 6
        assert all(b >= a - 1e-6 * abs(a) for a, b in zip(history, history[1:]))

    def test_extract_ivector(self, ubm, stats):
        model = train_tmatrix(stats, ubm, D=4, iters=2, seed=0)

        ivector = extract_ivector(stats[0], model, labels=("room", 10.0, 0.3))

        assert ivector.values.shape == (4,)
        assert np.all(np.isfinite(ivector.values))
        assert ivector.labels == ("room", 10.0, 0.3)

    def test_zero_statistics_give_prior_mean(self, ubm, stats):
        """Test an utterance without frames maps to the prior mean."""
        model = train_tmatrix(stats, ubm, D=4, iters=1, seed=0)
        empty = SufficientStats(np.zeros(4), np.zeros((4, 3)))

        np.testing.assert_allclose(extract_ivector(empty, model).values, 0.0)

    def test_scalar_closed_form(self):
        """Test D = 1 with one Gaussian against the hand-derived posterior mean."""
        t, m, s2, n, f = 0.7, 0.3, 1.8, 12.0, 9.5
        ubm = GmmModel(np.array([1.0]), np.array([[m]]), np.array([[s2]]))
        model = TMatrixModel(np.array([[t]]), ubm)

        w = extract_ivector(SufficientStats(np.array([n]), np.array([[f]])), model).values

        expected = (t * (f - n * m) / s2) / (1.0 + t ** 2 * n / s2)
        assert w.shape == (1,)
        assert w[0] == pytest.approx(expected, abs=1e-10)

    def test_matches_numerical_maximization(self):
        """Test the posterior mean maximizes the Gaussian posterior log-density."""
        rng = np.random.default_rng(12)
        ubm = GmmModel(np.array([0.4, 0.6]), rng.normal(size=(2, 2)), rng.uniform(0.5, 2.0, size=(2, 2)))
        model = TMatrixModel(rng.normal(size=(4, 2)), ubm)
        stats = SufficientStats(np.array([7.0, 13.0]), rng.normal(size=(2, 2)) * 5.0)

        occupancy = np.repeat(stats.n, 2)
        variances = ubm.variances.reshape(-1)
        centred = (stats.f - stats.n[:, None] * ubm.means).reshape(-1)

        def negative_log_posterior(w):
            tw = model.T @ w
            return 0.5 * w @ w + 0.5 * np.sum(occupancy * tw ** 2 / variances) - tw @ (centred / variances)

        def gradient(w):
            tw = model.T @ w
            return w + model.T.T @ (occupancy * tw / variances - centred / variances)

        result = minimize(negative_log_posterior, np.zeros(2), jac=gradient, method="BFGS",
                          options={"gtol": 1e-12})

        np.testing.assert_allclose(extract_ivector(stats, model).values, result.x, atol=1e-6)

    def test_deterministic(self, ubm, stats):
        a = train_tmatrix(stats, ubm, D=4, iters=2, seed=9)
        b = train_tmatrix(stats, ubm, D=4, iters=2, seed=9)
        np.testing.assert_array_equal(a.T, b.T)

    def test_dimension_bounds(self, ubm, stats):
        with pytest.raises(ValidationException):
            train_tmatrix(stats, ubm, D=12, iters=1, seed=0)
        with pytest.raises(InsufficientDataException):
            train_tmatrix(stats[:3], ubm, D=4, iters=1, seed=0)

    def test_payload(self, ubm, stats):
        model = train_tmatrix(stats, ubm, D=4, iters=1, seed=0)
        meta, arrays = model.to_payload()
        restored = TMatrixModel.from_payload(meta, arrays)

        assert meta == {"C": 4, "F": 3, "D": 4}
        np.testing.assert_array_equal(restored.T, model.T)
        np.testing.assert_array_equal(restored.ubm.means, ubm.means)
