import numpy as np
import pytest

from occlab.diffcore import DiffValue, gradcheck
from occlab.rendering import (
    RayBundle,
    SampleBatch,
    composite,
    composite_arrays,
    stratified_sample,
)


def test_zero_density_shows_background():
    result = composite_arrays(
        np.zeros(4), np.ones((4, 3)), np.full(4, 0.25), [0, 4], background=(0.1, 0.2, 0.3)
    )
    assert np.allclose(result.color, [[0.1, 0.2, 0.3]])
    assert np.allclose(result.transmittance, 1.0)
    assert result.opacity[0] == 0.0


def test_two_sample_weights():
    colors = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    result = composite_arrays(np.full(2, np.log(2.0)), colors, np.ones(2), [0, 2])
    assert np.allclose(result.weights, [0.5, 0.25])
    assert np.allclose(result.color, [[0.5, 0.25, 0.0]])


def test_weights_and_transmittance_properties():
    rng = np.random.default_rng(0)
    sigma = rng.uniform(0, 5, 300)
    offsets = [0, 100, 100, 250, 300]
    result = composite_arrays(sigma, rng.random((300, 3)), rng.uniform(0, 0.1, 300), offsets)
    assert np.all(result.weights >= 0) and np.all(result.weights <= 1)
    for r in range(4):
        lo, hi = offsets[r], offsets[r + 1]
        assert result.weights[lo:hi].sum() <= 1.0 + 1e-12
        assert np.all(np.diff(result.transmittance[lo:hi]) <= 0)


def test_piecewise_constant_field_matches_closed_form():
    rays = RayBundle([[0.0, 0.0, 0.0]], [[1.0, 0.0, 0.0]], [0.0], [1.0])
    samples = stratified_sample(rays, 1024, jitter=False)
    t = samples.t
    sigma = np.where((t >= 0.2) & (t < 0.5), 1.0, 0.0) + np.where((t >= 0.5) & (t < 0.7), 3.0, 0.0)
    colors = np.zeros((t.size, 3))
    colors[t < 0.5, 0] = 1.0
    colors[t >= 0.5, 1] = 1.0
    result = composite_arrays(sigma, colors, samples.deltas, samples.ray_offsets)
    red = 1.0 - np.exp(-0.3)
    green = np.exp(-0.3) * (1.0 - np.exp(-0.6))
    assert abs(result.color[0, 0] - red) < 1e-3
    assert abs(result.color[0, 1] - green) < 1e-3
    assert abs(result.opacity[0] - (1.0 - np.exp(-0.9))) < 1e-3


@pytest.mark.parametrize("pieces", [2, 3, 7, 64])
def test_splitting_a_constant_segment_is_invariant(pieces):
    sigma, length = 2.3, 0.8
    whole = composite_arrays([sigma], [[0.3, 0.6, 0.9]], [length], [0, 1])
    split = composite_arrays(
        np.full(pieces, sigma),
        np.tile([0.3, 0.6, 0.9], (pieces, 1)),
        np.full(pieces, length / pieces),
        [0, pieces],
    )
    assert abs(whole.final_transmittance[0] - split.final_transmittance[0]) < 1e-12
    assert np.max(np.abs(whole.color - split.color)) < 1e-12


def ragged_batch():
    rays = RayBundle(np.zeros((3, 3)), np.tile([0.0, 0.0, 1.0], (3, 1)), np.zeros(3), np.ones(3))
    t = np.array([0.1, 0.4, 0.8, 0.05, 0.2, 0.3, 0.6, 0.9])
    deltas = np.array([0.3, 0.4, 0.2, 0.15, 0.1, 0.3, 0.3, 0.1])
    return SampleBatch(rays, t, deltas, [0, 3, 3, 8], t - 0.01, t + 0.01)


def test_composite_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    samples = ragged_batch()
    for i in range(20):
        sigma = DiffValue(rng.uniform(0.2, 4.0, (8, 1)))
        rgb = DiffValue(rng.random((8, 3)))
        background = tuple(rng.random(3))

        def fn(s, c):
            return composite(s, c, samples, background)[0]

        assert gradcheck(fn, [sigma, rgb], seed=i) < 1e-5


def test_composite_matches_arrays_and_reports_depth():
    samples = ragged_batch()
    sigma = np.linspace(0.5, 3.0, 8)
    rgb = np.random.default_rng(2).random((8, 3))
    value, result = composite(DiffValue(sigma[:, None]), DiffValue(rgb), samples)
    plain = composite_arrays(sigma, rgb, samples.deltas, samples.ray_offsets, t=samples.t)
    assert np.allclose(value.data, plain.color)
    assert np.allclose(result.depth, plain.depth)
    assert result.depth[1] == 0.0
