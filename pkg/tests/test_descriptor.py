"""Descriptor tests: Haar responses against a scalar oracle and a
rotation permutation, the bilinear weight table, L1 normalisation
invariants, translation covariance, and SAD metric properties.
"""

import numpy as np
import pytest

from kpboost.descriptor import (
    DESCRIPTOR_L1,
    DESCRIPTOR_SIZE,
    Descriptor,
    bilinear_weight_matrix,
    compute_descriptor,
    haar_gradient,
    sad,
)
from kpboost.detector import Keypoint
from kpboost.errors import ContractError
from kpboost.image import GrayImage, integral


def scalar_haar(pixels, cx, cy, size):
    # independent double-loop re-implementation
    h = size // 2
    patch = pixels[cy - h : cy + h, cx - h : cx + h].astype(int)
    dx = patch[:, h:].sum() - patch[:, :h].sum()
    dy = patch[h:, :].sum() - patch[:h, :].sum()
    return int(dx), int(dy)


def random_descriptor(rng, size=40):
    pixels = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
    kp = Keypoint(size // 2, size // 2, 256, 1)
    d = compute_descriptor(integral(GrayImage(pixels)), kp)
    assert d is not None
    return d


class TestHaarGradient:
    def test_constant_image_zero(self):
        ii = integral(GrayImage(np.full((16, 16), 99, dtype=np.uint8)))
        assert haar_gradient(ii, 8, 8, 4) == (0, 0)

    def test_vertical_step_edge(self):
        pixels = np.zeros((12, 12), dtype=np.uint8)
        pixels[:, 6:] = 255
        ii = integral(GrayImage(pixels))
        # support x in [4, 7]: left half black, right half white
        assert haar_gradient(ii, 6, 6, 4) == (255 * 4 * 2, 0)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(2025)
        pixels = rng.integers(0, 256, size=(30, 34), dtype=np.uint8)
        ii = integral(GrayImage(pixels))
        for _ in range(300):
            size = 2 * int(rng.integers(1, 6))
            h = size // 2
            cx = int(rng.integers(h, 34 - h + 1))
            cy = int(rng.integers(h, 30 - h + 1))
            assert haar_gradient(ii, cx, cy, size) == scalar_haar(pixels, cx, cy, size)

    def test_rotation_permutes_components(self):
        rng = np.random.default_rng(17)
        for size in (2, 4, 6, 8):
            h = size // 2
            patch = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
            rotated = np.rot90(patch).copy()
            dx, dy = haar_gradient(integral(GrayImage(patch)), h, h, size)
            dxr, dyr = haar_gradient(integral(GrayImage(rotated)), h, h, size)
            assert (dxr, dyr) == (dy, -dx)

    def test_out_of_bounds_raises(self):
        ii = integral(GrayImage(np.zeros((10, 10), dtype=np.uint8)))
        with pytest.raises(ContractError):
            haar_gradient(ii, 1, 5, 4)
        with pytest.raises(ContractError):
            haar_gradient(ii, 5, 9, 4)

    def test_odd_size_rejected(self):
        ii = integral(GrayImage(np.zeros((10, 10), dtype=np.uint8)))
        with pytest.raises(ContractError):
            haar_gradient(ii, 5, 5, 3)


class TestBilinearWeights:
    def test_rows_sum_to_fp8_unity(self):
        w = bilinear_weight_matrix()
        assert w.shape == (400, 16)
        np.testing.assert_array_equal(w.sum(axis=1), np.full(400, 256))

    def test_at_most_four_cells_per_sample(self):
        w = bilinear_weight_matrix()
        assert int((w > 0).sum(axis=1).max()) <= 4

    def test_weights_nonnegative(self):
        assert int(bilinear_weight_matrix().min()) >= 0

    def test_interior_sample_splits_as_expected(self):
        # sample i=3 on both axes: u = 0.7, cell 0 fraction 0.2
        w = bilinear_weight_matrix()
        row = w[3 * 20 + 3]
        f = (256 * 1) // 5  # 51
        assert row[0 * 4 + 0] == ((256 - f) * (256 - f)) >> 8
        assert row[0 * 4 + 1] == ((256 - f) * f) >> 8
        assert row[1 * 4 + 0] == (f * (256 - f)) >> 8
        assert row[1 * 4 + 1] == 256 - row[0] - row[1] - row[4]

    def test_corner_sample_single_cell(self):
        w = bilinear_weight_matrix()
        assert w[0, 0] == 256  # sample (0, 0) deposits wholly into cell (0, 0)
        assert w[19 * 20 + 19, 15] == 256


class TestComputeDescriptor:
    def test_constant_patch_zero_descriptor(self):
        img = GrayImage(np.full((40, 40), 55, dtype=np.uint8))
        d = compute_descriptor(integral(img), Keypoint(20, 20, 256, 1))
        assert d is not None and d.is_zero

    def test_l1_budget_exact(self):
        rng = np.random.default_rng(900)
        for scale in (256, 307, 473, 512, 717):
            size = 80
            pixels = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
            kp = Keypoint(40, 40, scale, 1)
            d = compute_descriptor(integral(GrayImage(pixels)), kp)
            assert d is not None
            assert int(np.abs(d.values.astype(np.int32)).sum()) == DESCRIPTOR_L1

    def test_subregion_magnitude_bounds(self):
        d = random_descriptor(np.random.default_rng(31))
        v = d.values.astype(int).reshape(16, 4)
        assert np.all(np.abs(v[:, 0]) <= v[:, 1])  # |sum dx| <= sum |dx|
        assert np.all(np.abs(v[:, 2]) <= v[:, 3])

    def test_translation_covariance(self):
        rng = np.random.default_rng(606)
        patch = rng.integers(0, 256, size=(30, 30), dtype=np.uint8)

        def descriptor_at(ox, oy):
            canvas = np.zeros((70, 70), dtype=np.uint8)
            canvas[oy : oy + 30, ox : ox + 30] = patch
            kp = Keypoint(ox + 15, oy + 15, 300, 1)
            return compute_descriptor(integral(GrayImage(canvas)), kp)

        a = descriptor_at(16, 20)
        b = descriptor_at(24, 28)
        assert a is not None and not a.is_zero
        assert a == b

    def test_border_keypoint_unbounded(self):
        img = GrayImage(np.zeros((40, 40), dtype=np.uint8))
        ii = integral(img)
        assert compute_descriptor(ii, Keypoint(5, 20, 256, 1)) is None
        assert compute_descriptor(ii, Keypoint(20, 36, 256, 1)) is None
        assert compute_descriptor(ii, Keypoint(20, 20, 1024, 1)) is None  # window 80

    def test_contrast_doubling_nearly_invariant(self):
        rng = np.random.default_rng(55)
        base = rng.integers(0, 100, size=(48, 48), dtype=np.uint8)
        kp = Keypoint(24, 24, 300, 1)
        d1 = compute_descriptor(integral(GrayImage(base)), kp)
        d2 = compute_descriptor(integral(GrayImage((base * 2).astype(np.uint8))), kp)
        assert d1 is not None and d2 is not None
        assert sad(d1, d2) <= 64

    def test_rejects_sub_unit_scale(self):
        ii = integral(GrayImage(np.zeros((40, 40), dtype=np.uint8)))
        with pytest.raises(ContractError):
            compute_descriptor(ii, Keypoint(20, 20, 200, 1))


class TestSad:
    def test_identity(self):
        d = random_descriptor(np.random.default_rng(1))
        assert sad(d, d) == 0

    def test_zero_to_normalized_is_budget(self):
        zero = Descriptor(np.zeros(DESCRIPTOR_SIZE, dtype=np.int16))
        d = random_descriptor(np.random.default_rng(2))
        assert sad(zero, d) == DESCRIPTOR_L1

    def test_matches_bruteforce_loop(self):
        rng = np.random.default_rng(3)
        a = random_descriptor(rng)
        b = random_descriptor(rng)
        want = sum(abs(int(x) - int(y)) for x, y in zip(a.values, b.values))
        assert sad(a, b) == want

    def test_metric_properties(self):
        rng = np.random.default_rng(4)
        ds = [random_descriptor(rng) for _ in range(6)]
        for a in ds:
            for b in ds:
                assert sad(a, b) == sad(b, a)
                assert (sad(a, b) == 0) == (a == b)
                assert 0 <= sad(a, b) <= 2 * DESCRIPTOR_L1
                for c in ds:
                    assert sad(a, c) <= sad(a, b) + sad(b, c)

    def test_descriptor_validation(self):
        with pytest.raises(ContractError):
            Descriptor(np.zeros(63, dtype=np.int16))
