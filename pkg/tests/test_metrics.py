import time

import numpy as np
import pytest

from oracles import ssim_direct

from oforest.errors import LengthMismatch, ShapeMismatch
from oforest.metrics import mse, ssim, ssim_map, stopwatch


class TestMse:
    def test_identical_zero(self):
        assert mse(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_unit_offset(self):
        assert mse(np.zeros(2), np.ones(2)) == 1.0

    def test_hand_value(self):
        assert abs(mse(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 5.0])) - 5.0 / 3.0) < 1e-15

    def test_symmetric_nonnegative(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=20), rng.normal(size=20)
        assert mse(a, b) == mse(b, a)
        assert mse(a, b) > 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            mse(np.zeros(3), np.zeros(4))


class TestSsim:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(1)
        for shape in ((8, 8), (28, 28)):
            img = rng.uniform(0, 255, size=shape)
            assert abs(ssim(img, img) - 1.0) < 1e-12

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 255, size=(16, 16))
        b = rng.uniform(0, 255, size=(16, 16))
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12

    def test_constant_images_against_direct_formula(self):
        a = np.zeros((8, 8))
        b = np.full((8, 8), 255.0)
        got = ssim(a, b)
        want = ssim_direct(a, b, 255.0)
        assert abs(got - want) < 1e-12
        assert 0.0 < got < 1e-3  # only the stabilizing constants keep it positive

    def test_matches_direct_formula_small_and_large(self):
        rng = np.random.default_rng(3)
        small = rng.uniform(0, 255, size=(8, 8)), rng.uniform(0, 255, size=(8, 8))
        large = rng.uniform(0, 255, size=(15, 13)), rng.uniform(0, 255, size=(15, 13))
        for a, b in (small, large):
            assert abs(ssim(a, b) - ssim_direct(a, b, 255.0)) < 1e-12

    def test_range(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            a = rng.uniform(0, 255, size=(12, 12))
            b = rng.uniform(0, 255, size=(12, 12))
            assert -1.0 <= ssim(a, b) <= 1.0

    def test_rgb_is_channel_mean(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(0, 255, size=(14, 14, 3))
        b = rng.uniform(0, 255, size=(14, 14, 3))
        per = [ssim(a[:, :, c], b[:, :, c]) for c in range(3)]
        assert abs(ssim(a, b) - np.mean(per)) < 1e-12

    def test_translation_with_aligned_windows(self):
        # same content embedded at two offsets; map values agree wherever the
        # window sits fully inside the content
        rng = np.random.default_rng(6)
        content_a = rng.uniform(0, 255, size=(20, 20))
        content_b = rng.uniform(0, 255, size=(20, 20))
        canvas = np.zeros((34, 34))
        a1, b1 = canvas.copy(), canvas.copy()
        a2, b2 = canvas.copy(), canvas.copy()
        a1[3:23, 3:23], b1[3:23, 3:23] = content_a, content_b
        a2[7:27, 9:29], b2[7:27, 9:29] = content_a, content_b
        m1 = ssim_map(a1, b1, 255.0)
        m2 = ssim_map(a2, b2, 255.0)
        inner = 20 - 11 + 1
        assert np.allclose(m1[3:3 + inner, 3:3 + inner],
                           m2[7:7 + inner, 9:9 + inner], atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            ssim(np.zeros((4, 4)), np.zeros((4, 5)))


class TestStopwatch:
    def test_measures_elapsed_time(self):
        with stopwatch("nap") as t:
            time.sleep(0.01)
        assert t.label == "nap"
        assert t.seconds >= 0.009
