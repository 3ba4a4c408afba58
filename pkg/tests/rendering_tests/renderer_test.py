import numpy as np
import pytest

from occlab.rendering import Camera, StratifiedSampler, render_image
from occlab.scene import Primitive, SceneOracle


def test_empty_scene_renders_background():
    camera = Camera.look_at([0.0, -3.0, 0.5], [0.0, 0.0, 0.0], width=8, height=8)
    image = render_image(camera, SceneOracle([]), background=(0.2, 0.4, 0.6))
    assert np.allclose(image.rgb, [0.2, 0.4, 0.6])
    assert np.allclose(image.opacity, 0.0)


def test_sphere_center_depth():
    oracle = SceneOracle([Primitive("sphere", radius=0.5, albedo=(1.0, 0.0, 0.0))])
    camera = Camera.look_at([0.0, -3.0, 0.0], [0.0, 0.0, 0.0], width=33, height=33)
    image = render_image(camera, oracle, StratifiedSampler(128, jitter=False))
    center = image.depth[16, 16]
    delta = 2.0 / 128
    assert abs(center - 2.5) < 2 * delta
    assert image.opacity[16, 16] == pytest.approx(1.0)
    assert image.rgb[16, 16, 0] == pytest.approx(1.0, abs=1e-4)
    # the corner ray misses the sphere
    assert image.opacity[0, 0] < 1e-6


def test_render_is_deterministic_and_thread_independent():
    oracle = SceneOracle([Primitive("box", half_size=(0.3, 0.3, 0.3))])
    camera = Camera.look_at([2.0, -2.0, 1.0], [0.0, 0.0, 0.0], width=16, height=16)
    sampler = StratifiedSampler(64, jitter=True)
    a = render_image(camera, oracle, sampler, seed=3, chunk=64)
    b = render_image(camera, oracle, sampler, seed=3, chunk=64, threads=4)
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(a.depth, b.depth)
    assert a.field_evaluations == b.field_evaluations
