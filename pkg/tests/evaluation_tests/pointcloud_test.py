import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.evaluation import export_pointcloud, field_pointcloud
from occlab.fields import NetworkConfig, OccupancyField
from occlab.rendering import RayBundle, StratifiedSampler
from occlab.writer import RunWriter


def points():
    rng = np.random.default_rng(0)
    return {
        "positions": rng.uniform(-1.0, 1.0, (5, 3)),
        "sigma": np.array([100.0, 0.0, 100.0, 0.0, 100.0]),
        "rgb": rng.random((5, 3)),
        "deltas": np.full(5, 1.0),
    }


def header(file_name):
    lines = open(file_name).read().splitlines()
    return lines[: lines.index("end_header") + 1], lines[lines.index("end_header") + 1 :]


def test_split_by_route(tmp_path):
    writer = RunWriter(str(tmp_path))
    routed = np.array([True, False, False, True, False])
    written = export_pointcloud(writer, "cloud/step_1", routed_to_empty=routed, **points())
    assert [p.split("/")[-1] for p in written] == [
        "step_1_scene_rgba.ply",
        "step_1_empty_rgba.ply",
    ]
    head, body = header(written[0])
    assert "element vertex 3" in head
    assert "property uchar alpha" in head
    assert [row.split()[-1] for row in body] == ["0", "255", "255"]
    head, body = header(written[1])
    assert "element vertex 2" in head


def test_rgb_mode_has_no_alpha(tmp_path):
    written = export_pointcloud(RunWriter(str(tmp_path)), "all", mode="rgb", **points())
    assert written[0].endswith("all_rgb.ply")
    head, body = header(written[0])
    assert "property uchar alpha" not in head
    assert len(body) == 5 and len(body[0].split()) == 6


def test_unknown_mode(tmp_path):
    with pytest.raises(ConfigurationError):
        export_pointcloud(RunWriter(str(tmp_path)), "all", mode="xyz", **points())


def test_field_pointcloud_covers_every_sample(tmp_path):
    field = OccupancyField(NetworkConfig(width=8, occupancy_width=8, scene_layers=2), seed=1)
    rays = RayBundle([[-1.0, 0.0, 0.0]] * 2, [[1.0, 0.0, 0.0]] * 2, [0.0, 0.0], [2.0, 2.0])
    cloud = field_pointcloud(field, rays, StratifiedSampler(4, jitter=False))
    assert cloud["positions"].shape == (8, 3)
    assert cloud["routed_to_empty"].shape == (8,)
    written = export_pointcloud(RunWriter(str(tmp_path)), "field", **cloud)
    counts = [int(header(p)[0][3].split()[-1]) for p in written]
    assert sum(counts) == 8
