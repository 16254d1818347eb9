"""
Tests for metadata augmentation and the leakage guard.
"""
import numpy as np
import pytest

from evector.augment import LeakageGuard, MetadataScaler, augment
from evector.lda import compute_scatter, project, train_lda
from utils.config import AugmentVariant
from utils.error_handler import ExitCode, LeakageException, ValidationException


@pytest.fixture
def scaler():
    return MetadataScaler.fit([5.0, 15.0, 25.0], [0.1, 0.3, 0.5])


class TestMetadataScaler:
    """Tests for metadata normalization."""

    def test_fit(self, scaler):
        assert scaler.snr_mean == 15.0
        assert scaler.t60_mean == pytest.approx(0.3)
        np.testing.assert_allclose(scaler.z_snr([5.0, 15.0, 25.0]).std(), 1.0)

    def test_constant_field(self):
        scaler = MetadataScaler.fit([10.0, 10.0], [0.2, 0.4])
        assert scaler.snr_std == 1.0
        np.testing.assert_array_equal(scaler.z_snr([10.0, 11.0]), [0.0, 1.0])

    def test_empty(self):
        with pytest.raises(ValidationException):
            MetadataScaler.fit([], [])


class TestAugment:
    """Tests for augment."""

    def test_none_returns_input(self, scaler):
        X = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(augment(X, [1, 2], [0.1, 0.2], scaler, AugmentVariant.NONE), X)
        np.testing.assert_array_equal(augment(X[0], 1.0, 0.1, None, AugmentVariant.NONE), X[0])

    @pytest.mark.parametrize("variant,width", [
        (AugmentVariant.SNR, 4),
        (AugmentVariant.T60, 4),
        (AugmentVariant.SNR_T60, 5),
        (AugmentVariant.CONSTANT, 4),
    ])
    def test_widths(self, scaler, variant, width):
        X = np.zeros((3, 3))
        assert augment(X, [5.0, 15.0, 25.0], [0.1, 0.3, 0.5], scaler, variant).shape == (3, width)

    def test_appended_values(self, scaler):
        """Test the appended columns are the z-normalized estimates."""
        out = augment(np.zeros((1, 2)), [25.0], [0.1], scaler, AugmentVariant.SNR_T60)

        assert out[0, 2] == pytest.approx(scaler.z_snr(25.0))
        assert out[0, 3] == pytest.approx(scaler.z_t60(0.1))
        np.testing.assert_array_equal(out[0, :2], 0.0)

    def test_constant_appends_zeros(self, scaler):
        out = augment(np.ones((2, 2)), [5.0, 25.0], [0.1, 0.5], scaler, AugmentVariant.CONSTANT)
        np.testing.assert_array_equal(out[:, 2], 0.0)

    def test_single_vector(self, scaler):
        out = augment(np.zeros(3), 15.0, 0.3, scaler, AugmentVariant.SNR_T60)
        np.testing.assert_allclose(out, [0.0, 0.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_missing_scaler(self):
        with pytest.raises(ValidationException):
            augment(np.zeros((1, 2)), [10.0], [0.2], None, AugmentVariant.SNR)

    def test_count_mismatch(self, scaler):
        with pytest.raises(ValidationException):
            augment(np.zeros((2, 2)), [10.0], [0.2, 0.3], scaler, AugmentVariant.SNR_T60)

    def test_constant_augmentation_is_inert_for_lda(self, scaler):
        """Test a constant metadata field gets no LDA weight."""
        rng = np.random.default_rng(1)
        labels = [f"room-{r}" for r in range(10) for _ in range(6)]
        X = rng.standard_normal((10, 5)).repeat(6, axis=0) * 3.0 + 0.5 * rng.standard_normal((60, 5))
        augmented = augment(X, np.full(60, 15.0), np.full(60, 0.3), scaler, AugmentVariant.CONSTANT)

        plain = train_lda(compute_scatter(X, labels), 3)
        extended = train_lda(compute_scatter(augmented, labels), 3)

        np.testing.assert_allclose(extended.A[-1], 0.0, atol=1e-10)
        np.testing.assert_allclose(project(augmented, extended), project(X, plain), atol=1e-5)


class TestLeakageGuard:
    """Tests for the leakage guard."""

    def test_allows_training_splits(self):
        LeakageGuard().check(["train", "val"], "metadata normalization")

    def test_rejects_held_out_split(self):
        """Test held-out splits trip the guard with exit code 4."""
        with pytest.raises(LeakageException) as info:
            LeakageGuard(allowed=("train",)).check(["train", "test"], "PLDA fit")

        assert info.value.exit_code == ExitCode.LEAKAGE_VIOLATION
        assert info.value.details["splits"] == ["test"]
