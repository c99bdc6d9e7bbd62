import numpy as np
import pytest

from talkqa.errors import MissingComponentError
from talkqa.model.frames import from_arrays
from talkqa.model.fusion import (
    FeatureBundle,
    frame_averaged_features,
    fuse,
    gap,
    mean_frame_features,
)


class TestGap:
    def test_vector_passes_through(self):
        v = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(gap(v), v)

    def test_scalar_becomes_length_one(self):
        assert np.array_equal(gap(0.75), np.array([0.75]))

    def test_matrix_pools_leading_axis(self):
        v = np.array([2.0, -1.0, 4.0, 0.5])
        stacked = np.tile(v, (7, 1))  # identical rows pool back to v
        assert np.allclose(gap(stacked), v)

    def test_three_axis_pooling(self):
        arr = np.arange(24.0).reshape(2, 3, 4)
        assert np.allclose(gap(arr), arr.mean(axis=(0, 1)))


class TestFuse:
    def test_fused_length_4_4_1_4(self):
        fused = fuse(np.zeros(4), np.zeros(4), 0.5, np.zeros(4))
        assert fused.shape == (13,)

    def test_identity_scalar_position(self):
        fused = fuse(np.zeros(4), np.zeros(4), 0.75, np.zeros(4))
        assert fused[8] == 0.75

    def test_fixed_order(self):
        fused = fuse(np.full(2, 1.0), np.full(3, 2.0), -0.5, np.full(2, 3.0))
        assert np.array_equal(fused, [1, 1, 2, 2, 2, -0.5, 3, 3])

    def test_missing_component_named(self):
        with pytest.raises(MissingComponentError, match="f_h"):
            fuse(np.zeros(4), None, 0.5, np.zeros(4))

    def test_pooled_matrix_input(self):
        v = np.array([1.0, 2.0])
        fused = fuse(np.tile(v, (5, 1)), v, 0.0, v)
        assert np.allclose(fused, [1, 2, 1, 2, 0, 1, 2])


class TestBundle:
    def test_identity_out_of_bounds_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            FeatureBundle("x", np.zeros(2), np.zeros(2), 1.5, np.zeros(2))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            FeatureBundle("x", np.array([np.nan]), np.zeros(2), 0.0, np.zeros(2))

    def test_fused_property(self):
        b = FeatureBundle("x", np.ones(4), np.ones(4), 0.25, np.ones(4))
        assert b.fused.shape == (13,)
        assert b.fused[8] == 0.25


class TestFrameAveraging:
    def test_single_frame_is_identity(self):
        u = np.array([1.0, 5.0])
        assert np.array_equal(mean_frame_features([u]), u)

    def test_identical_frames(self):
        v = np.array([2.0, 3.0])
        assert np.array_equal(mean_frame_features([v, v, v]), v)

    def test_two_frames_average(self):
        u = np.array([1.0, 2.0])
        w = np.array([3.0, 6.0])
        assert np.allclose(mean_frame_features([u, w]), (u + w) / 2)

    def test_scaling_linearity(self):
        rng = np.random.default_rng(0)
        frames = [rng.normal(size=6) for _ in range(5)]
        base = mean_frame_features(frames)
        scaled = mean_frame_features([3.5 * f for f in frames])
        assert np.allclose(scaled, 3.5 * base)

    def test_reference_frame_excluded(self):
        # frames carry their own feature; the reference's poison value must
        # never reach the average
        reference = np.full((2, 2, 3), 255, dtype=np.uint8)
        samples = from_arrays(reference, [np.full((2, 2, 3), v, dtype=np.uint8) for v in (10, 20)])

        def extract(frame):
            value = float(frame[0, 0, 0])
            assert value != 255.0, "reference frame leaked into the human average"
            return np.array([value])

        assert frame_averaged_features(samples, extract) == pytest.approx(15.0)

    def test_single_sampled_frame_passthrough(self):
        reference = np.zeros((2, 2, 3), dtype=np.uint8)
        samples = from_arrays(reference, [np.full((2, 2, 3), 7, dtype=np.uint8)])
        out = frame_averaged_features(samples, lambda f: np.array([float(f[0, 0, 0]), 1.0]))
        assert np.array_equal(out, [7.0, 1.0])


def test_fuse_is_per_stimulus_stateless():
    rng = np.random.default_rng(1)
    inputs = [
        (rng.normal(size=4), rng.normal(size=4), float(rng.uniform(-1, 1)), rng.normal(size=4))
        for _ in range(10)
    ]
    first = [fuse(*args) for args in inputs]
    permuted = [fuse(*inputs[i]) for i in reversed(range(10))]
    for i, fused in enumerate(first):
        assert np.array_equal(fused, permuted[9 - i])
