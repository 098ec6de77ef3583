import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from apcnn import imaging
from apcnn.errors import InvalidArgumentError, ShapeError
from helpers import naive_blur2d, naive_resize_bilinear


def rgb(h, w, value):
    return np.full((h, w, 3), value, dtype=np.float64)


class TestRgbToGray:
    def test_white_maps_to_one(self):
        gray = imaging.rgb_to_gray(rgb(4, 5, 1.0))
        assert gray.shape == (4, 5)
        assert gray == pytest.approx(1.0)

    def test_pure_red_uses_red_weight(self):
        img = np.zeros((1, 1, 3))
        img[0, 0, 0] = 1.0
        assert imaging.rgb_to_gray(img)[0, 0] == pytest.approx(0.2989)

    @pytest.mark.parametrize("v", [0.0, 0.25, 0.5, 0.9, 1.0])
    def test_equal_channels_pass_through(self, v):
        assert imaging.rgb_to_gray(rgb(3, 3, v)) == pytest.approx(v)

    def test_rejects_bad_shape(self):
        with pytest.raises(ShapeError):
            imaging.rgb_to_gray(np.zeros((4, 4)))


class TestResizeBilinear:
    def test_same_size_is_identity(self):
        rng = np.random.default_rng(0)
        img = rng.random((7, 9))
        out = imaging.resize_bilinear(img, 9, 7)
        np.testing.assert_array_equal(out, img)

    def test_constant_stays_constant(self):
        out = imaging.resize_bilinear(np.full((5, 5), 0.5), 13, 3)
        assert out.shape == (3, 13)
        np.testing.assert_allclose(out, 0.5, rtol=0, atol=1e-12)

    def test_ramp_matches_scalar_oracle(self):
        img = np.arange(16, dtype=np.float64).reshape(4, 4) / 15.0
        got = imaging.resize_bilinear(img, 2, 2)
        want = naive_resize_bilinear(img, 2, 2)
        np.testing.assert_allclose(got, want, atol=1e-12)

    @pytest.mark.parametrize("ow,oh", [(5, 3), (16, 16), (2, 9)])
    def test_random_matches_scalar_oracle(self, ow, oh):
        rng = np.random.default_rng(ow * 100 + oh)
        img = rng.random((6, 8))
        np.testing.assert_allclose(
            imaging.resize_bilinear(img, ow, oh), naive_resize_bilinear(img, ow, oh), atol=1e-12
        )

    @pytest.mark.parametrize("ow,oh", [(0, 4), (4, 0), (-1, 3)])
    def test_rejects_empty_target(self, ow, oh):
        with pytest.raises(InvalidArgumentError):
            imaging.resize_bilinear(np.zeros((4, 4)), ow, oh)


class TestGaussianBlur:
    def test_constant_is_fixed_point(self):
        out = imaging.gaussian_blur(np.full((10, 10), 0.37), sigma=1.5)
        np.testing.assert_allclose(out, 0.37, atol=1e-12)

    def test_impulse_gives_normalized_gaussian(self):
        img = np.zeros((21, 21))
        img[10, 10] = 1.0
        out = imaging.gaussian_blur(img, sigma=1.0)
        assert out.sum() == pytest.approx(1.0, abs=1e-6)
        k = imaging.gaussian_kernel_1d(1.0)
        r = k.size // 2
        np.testing.assert_allclose(out[10 - r : 10 + r + 1, 10 - r : 10 + r + 1], np.outer(k, k), atol=1e-12)

    def test_matches_naive_2d_convolution(self):
        rng = np.random.default_rng(7)
        img = rng.random((16, 16))
        sigma = 1.2
        want = naive_blur2d(img, imaging.gaussian_kernel_1d(sigma))
        np.testing.assert_allclose(imaging.gaussian_blur(img, sigma), want, atol=1e-6)

    def test_kernel_radius_rule(self):
        assert imaging.gaussian_kernel_1d(1.0).size == 2 * 3 + 1
        assert imaging.gaussian_kernel_1d(math.sqrt(2.0)).size == 2 * math.ceil(3 * math.sqrt(2)) + 1

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_rejects_bad_sigma(self, sigma):
        with pytest.raises(InvalidArgumentError):
            imaging.gaussian_blur(np.zeros((8, 8)), sigma)


class TestCanny:
    def test_constant_image_has_no_edges(self):
        assert imaging.canny_vertical(np.full((16, 16), 0.8)).sum() == 0

    def test_vertical_step_edges_hug_the_boundary(self):
        img = np.zeros((32, 32))
        img[:, 16:] = 1.0
        edges = imaging.canny_vertical(img)
        assert edges.sum() > 0
        cols = np.unique(np.nonzero(edges)[1])
        assert set(cols.tolist()) <= {15, 16}
        # independent oracle: per-row gradient-magnitude argmax on the blurred image
        blurred = imaging.gaussian_blur(img, imaging.CANNY_SIGMA)
        gx = np.gradient(blurred, axis=1)
        peaks = np.abs(gx).argmax(axis=1)
        assert set(peaks.tolist()) <= {15, 16}

    def test_horizontal_step_is_filtered_out(self):
        img = np.zeros((32, 32))
        img[16:, :] = 1.0
        edges = imaging.canny_vertical(img)
        assert edges.sum() == 0
        # the oracle view: the gradient is vertical wherever it is nonzero,
        # outside the +/-45-degrees-of-horizontal keep band
        blurred = imaging.gaussian_blur(img, imaging.CANNY_SIGMA)
        gy = np.gradient(blurred, axis=0)
        gx = np.gradient(blurred, axis=1)
        nz = np.hypot(gx, gy) > 1e-12
        assert np.all(np.abs(gy[nz]) > np.abs(gx[nz]))

    def test_horizontal_step_survives_without_filter(self):
        img = np.zeros((32, 32))
        img[16:, :] = 1.0
        assert imaging.canny(img, direction_filter=False).sum() > 0

    def test_filtered_output_is_subset_of_unfiltered(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            img = imaging.gaussian_blur(rng.random((24, 24)), 1.0)
            filtered = imaging.canny(img, direction_filter=True)
            unfiltered = imaging.canny(img, direction_filter=False)
            assert np.all(filtered <= unfiltered)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        img = rng.random((20, 20))
        np.testing.assert_array_equal(imaging.canny_vertical(img), imaging.canny_vertical(img))

    def test_output_is_binary(self):
        rng = np.random.default_rng(9)
        edges = imaging.canny_vertical(rng.random((16, 16)))
        assert edges.dtype == np.uint8
        assert set(np.unique(edges)) <= {0, 1}

    @pytest.mark.parametrize("shape", [(4, 16), (16, 4), (7, 7)])
    def test_rejects_tiny_images(self, shape):
        with pytest.raises(InvalidArgumentError):
            imaging.canny_vertical(np.zeros(shape))


@settings(max_examples=25, deadline=None)
@given(
    hnp.arrays(
        np.float64,
        hnp.array_shapes(min_dims=2, max_dims=2, min_side=2, max_side=12),
        elements=st.floats(0.0, 1.0),
    )
)
def test_range_preserving_ops_stay_in_unit_interval(img):
    blurred = imaging.gaussian_blur(img, 0.8)
    assert blurred.min() >= -1e-12 and blurred.max() <= 1.0 + 1e-12
    resized = imaging.resize_bilinear(img, 5, 7)
    assert resized.min() >= -1e-12 and resized.max() <= 1.0 + 1e-12
    gray = imaging.rgb_to_gray(np.stack([img] * 3, axis=2))
    assert gray.min() >= -1e-12 and gray.max() <= 1.0 + 1e-12
