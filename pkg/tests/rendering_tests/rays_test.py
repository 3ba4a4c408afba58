import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.rendering import Camera, RayBundle, clip_to_bounds, generate_rays


def test_center_pixel_looks_down_minus_z():
    camera = Camera(np.eye(4), width=65, height=65, fov_deg=45.0)
    rays = generate_rays(camera)
    center = 32 * 65 + 32
    assert np.allclose(rays.directions[center], [0.0, 0.0, -1.0])


def test_directions_are_unit_and_count_matches():
    camera = Camera.look_at([2.0, 1.0, 1.5], [0.0, 0.0, 0.0], width=64, height=64)
    rays = generate_rays(camera)
    assert len(rays) == 4096
    assert np.max(np.abs(np.linalg.norm(rays.directions, axis=1) - 1.0)) < 1e-12
    assert np.allclose(rays.origins, [2.0, 1.0, 1.5])


def test_top_left_pixel_points_up_and_left():
    camera = Camera(np.eye(4), width=8, height=8)
    d = generate_rays(camera).directions[0]
    assert d[0] < 0 and d[1] > 0


def test_degenerate_poses_raise():
    with pytest.raises(ConfigurationError):
        Camera(np.diag([1.0, 1.0, 2.0, 1.0]))
    with pytest.raises(ConfigurationError):
        Camera(np.diag([1.0, 1.0, -1.0, 1.0]))
    with pytest.raises(ConfigurationError):
        Camera.look_at([0.0, 0.0, 2.0], [0.0, 0.0, 0.0])
    with pytest.raises(ConfigurationError):
        Camera.look_at([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])


def test_camera_dict_roundtrip():
    camera = Camera.look_at([0.0, -3.0, 1.0], [0.0, 0.0, 0.0], width=32, height=24)
    again = Camera.from_dict(camera.as_dict())
    assert np.array_equal(again.pose, camera.pose)
    assert again.intrinsics == camera.intrinsics


def test_clip_to_bounds():
    rays = RayBundle(
        [[-3.0, 0.0, 0.0], [-3.0, 5.0, 0.0], [0.0, 0.0, 0.0]],
        [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
    )
    clipped = clip_to_bounds(rays, (-1.0, 1.0))
    assert clipped.near[0] == pytest.approx(2.0)
    assert clipped.far[0] == pytest.approx(4.0)
    # misses the cube
    assert clipped.near[1] == clipped.far[1] == 0.0
    assert clipped.valid.tolist() == [True, False, True]
    # starts inside
    assert clipped.near[2] == 0.0
    assert clipped.far[2] == pytest.approx(1.0)
