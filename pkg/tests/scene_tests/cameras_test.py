import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.rendering import generate_rays
from occlab.scene import CameraRig


def test_cameras_surround_the_target():
    target = np.array([0.1, -0.2, -0.3])
    rig = CameraRig(12, width=9, height=9, distance=3.0, target=target)
    assert len(rig) == 12
    for camera in rig:
        offset = camera.origin - target
        assert np.linalg.norm(offset) == pytest.approx(3.0)
        elevation = np.degrees(np.arcsin(offset[2] / 3.0))
        assert 15.0 - 1e-9 <= elevation <= 75.0 + 1e-9
        center = generate_rays(camera).directions[4 * 9 + 4]
        assert np.allclose(center, -offset / 3.0)


def test_rig_is_deterministic():
    a = CameraRig(5).as_dict()
    b = CameraRig(5).as_dict()
    assert a == b
    assert np.array_equal(CameraRig(5)[3].pose, CameraRig(5)[3].pose)


def test_split():
    train, val = CameraRig(17).split(8)
    assert val == [0, 8, 16]
    assert len(train) == 14


def test_invalid_rig():
    with pytest.raises(ConfigurationError):
        CameraRig(0)
    with pytest.raises(ConfigurationError):
        CameraRig(4, min_elevation_deg=60.0, max_elevation_deg=30.0)
