import numpy as np
import pytest

from simlearn.exceptions import DegenerateScaleError
from simlearn.losses import Loss, batch_loss, estimate_loss_scale, mae, mse, psnr
from simlearn.metrics import MetricParams, fd_gradient, fd_relative_error


class TestMse:
    def test_constant_difference(self):
        x = np.zeros((8, 8))
        y = np.full((8, 8), 0.5)
        value, grad = mse(x, y)
        assert value == pytest.approx(0.25)
        assert grad == pytest.approx(np.full((8, 8), 1.0 / 64))

    def test_identical(self):
        x = np.random.default_rng(0).uniform(0, 1, (8, 8))
        value, grad = mse(x, x)
        assert value == 0.0
        assert not grad.any()

    def test_gradient_matches_fd(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 1, (12, 12))
        y = rng.uniform(0, 1, (12, 12))
        _, grad = mse(x, y)
        fd = fd_gradient(lambda a, b: mse(a, b)[0], x, y)
        assert fd_relative_error(grad, fd) < 1e-8

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros((4, 4)), np.zeros((4, 5)))


class TestMae:
    def test_constant_difference(self):
        value, grad = mae(np.zeros((8, 8)), np.full((8, 8), 0.5))
        assert value == pytest.approx(0.5)
        assert grad == pytest.approx(np.full((8, 8), 1.0 / 64))

    def test_identical_and_sign_zero(self):
        x = np.full((4, 4), 0.3)
        value, grad = mae(x, x.copy())
        assert value == 0.0
        assert not grad.any()

    def test_gradient_matches_fd_away_from_kinks(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, (12, 12))
        y = x + rng.choice([-1.0, 1.0], (12, 12)) * rng.uniform(0.05, 0.2, (12, 12))
        _, grad = mae(x, y)
        fd = fd_gradient(lambda a, b: mae(a, b)[0], x, y)
        assert fd_relative_error(grad, fd) < 1e-6

    def test_nonnegative_zero_iff_equal(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, (8, 8))
        y = x.copy()
        y[0, 0] += 1e-9
        assert mae(x, y)[0] > 0.0
        assert mse(x, y)[0] > 0.0


class TestPsnr:
    def test_constant_difference_point_one(self):
        assert psnr(np.zeros((8, 8)), np.full((8, 8), 0.1)) == pytest.approx(20.0)

    def test_one_gray_level(self):
        got = psnr(np.zeros((8, 8)), np.full((8, 8), 1.0 / 255))
        assert got == pytest.approx(20 * np.log10(255), abs=1e-4)
        assert got == pytest.approx(48.1308, abs=1e-3)

    def test_identical_is_infinite(self):
        x = np.random.default_rng(4).uniform(0, 1, (8, 8))
        assert psnr(x, x) == float("inf")

    def test_strictly_decreasing_in_noise(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0.2, 0.8, (16, 16))
        noise = rng.normal(0, 1, (16, 16))
        values = [psnr(x, x + amp * noise) for amp in (0.01, 0.02, 0.05, 0.1)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_bad_dynamic_range(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((8, 8)), np.ones((8, 8)), dynamic_range=0.0)


class TestLoss:
    def test_identifier_aliases(self):
        assert Loss("ssim").identifier == "neg_ssim"
        assert Loss("ms-ssim").identifier == "neg_ms_ssim"
        assert Loss("mse").identifier == "mse"

    def test_unknown_identifier(self):
        with pytest.raises(ValueError):
            Loss("charbonnier")

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            Loss("mse", scale=0.0)

    def test_ssim_pair_is_negated_metric(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 1, (16, 16))
        y = np.clip(x + rng.normal(0, 0.05, (16, 16)), 0, 1)
        loss = Loss("ssim")
        value, grad = loss.pair(x, y)
        assert value == pytest.approx(-1.0, abs=0.5)
        fd = fd_gradient(lambda a, b: loss.pair_value(a, b), x, y)
        assert fd_relative_error(grad, fd) < 1e-5

    def test_pair_value_agrees_with_pair(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 1, (16, 16))
        y = rng.uniform(0, 1, (16, 16))
        for name in ("mse", "mae", "ssim"):
            loss = Loss(name)
            assert loss.pair_value(x, y) == pytest.approx(loss.pair(x, y)[0], abs=1e-14)

    def test_with_scale(self):
        loss = Loss("mse").with_scale(4.0)
        assert loss.scale == 4.0
        assert loss.identifier == "mse"


class TestBatchLoss:
    def _pairs(self, n, seed):
        rng = np.random.default_rng(seed)
        xs = [rng.uniform(0, 1, (16, 16)) for _ in range(n)]
        ys = [np.clip(x + rng.normal(0, 0.1, (16, 16)), 0, 1) for x in xs]
        return xs, ys

    def test_identical_lists_under_neg_ssim(self):
        xs, _ = self._pairs(3, 8)
        value, grads = batch_loss(Loss("ssim"), xs, [x.copy() for x in xs])
        assert value == pytest.approx(-3.0, abs=1e-9)
        assert len(grads) == 3

    def test_empty_lists(self):
        value, grads = batch_loss(Loss("mse"), [], [])
        assert value == 0.0
        assert grads == []

    def test_equals_sum_of_individual_calls(self):
        xs, ys = self._pairs(2, 9)
        loss = Loss("mse", scale=2.0)
        value, grads = batch_loss(loss, xs, ys)
        singles = [batch_loss(loss, [x], [y]) for x, y in zip(xs, ys)]
        assert value == pytest.approx(sum(v for v, _ in singles), abs=1e-12)
        for got, (_, single) in zip(grads, singles):
            assert np.array_equal(got, single[0])

    def test_concatenation_additivity(self):
        xs, ys = self._pairs(4, 10)
        loss = Loss("mae", scale=3.0)
        whole, _ = batch_loss(loss, xs, ys)
        left, _ = batch_loss(loss, xs[:2], ys[:2])
        right, _ = batch_loss(loss, xs[2:], ys[2:])
        assert whole == pytest.approx(left + right, abs=1e-12)

    def test_scale_divides_value_and_grads(self):
        xs, ys = self._pairs(2, 11)
        v1, g1 = batch_loss(Loss("mse"), xs, ys)
        v4, g4 = batch_loss(Loss("mse", scale=4.0), xs, ys)
        assert v4 == pytest.approx(v1 / 4.0)
        assert g4[0] == pytest.approx(g1[0] / 4.0)

    def test_length_mismatch(self):
        xs, ys = self._pairs(2, 12)
        with pytest.raises(ValueError):
            batch_loss(Loss("mse"), xs, ys[:1])


class TestEstimateLossScale:
    def test_two_image_dataset_matches_enumeration(self):
        rng = np.random.default_rng(13)
        a = rng.uniform(0, 1, (16, 16))
        b = rng.uniform(0, 1, (16, 16))
        loss = Loss("mse")
        exact = np.mean(
            [loss.pair_value(p, q) for p in (a, b) for q in (a, b)]
        )
        got = estimate_loss_scale(loss, [a, b], n_pairs=10000, seed=0)
        assert abs(got - exact) / exact < 0.05

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(14)
        data = [rng.uniform(0, 1, (16, 16)) for _ in range(5)]
        loss = Loss("mae")
        s1 = estimate_loss_scale(loss, data, n_pairs=200, seed=7)
        s2 = estimate_loss_scale(loss, data, n_pairs=200, seed=7)
        assert s1 == s2
        assert s1 != estimate_loss_scale(loss, data, n_pairs=200, seed=8)

    def test_all_identical_dataset_is_degenerate(self):
        img = np.full((16, 16), 0.5)
        with pytest.raises(DegenerateScaleError):
            estimate_loss_scale(Loss("mse"), [img, img.copy()], n_pairs=50, seed=0)

    def test_neg_ssim_scale_is_positive(self):
        rng = np.random.default_rng(15)
        data = [rng.uniform(0, 1, (16, 16)) for _ in range(4)]
        scale = estimate_loss_scale(Loss("ssim"), data, n_pairs=100, seed=3)
        assert scale > 0.0

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            estimate_loss_scale(Loss("mse"), [], n_pairs=10, seed=0)
