import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.reader import read_dataset
from occlab.rendering import Camera, StratifiedSampler, render_image
from occlab.scene import CameraRig, load_scene, make_dataset
from occlab.writer import RunWriter


def small_rig():
    return CameraRig(3, width=8, height=8)


def test_quadrature_floor():
    with pytest.raises(ConfigurationError):
        make_dataset(load_scene("shapes"), small_rig(), quadrature=256)


def test_dataset_split_and_pixels():
    dataset = make_dataset(load_scene("shapes"), small_rig(), quadrature=512, val_stride=2)
    assert dataset.val_indices == [0, 2]
    assert dataset.train_indices == [1]
    image = dataset.images[1]
    assert image.shape == (8, 8, 3)
    assert np.allclose(image * 255.0, np.round(image * 255.0))
    rays, colors = dataset.sample_rays(np.random.default_rng(0), 10)
    assert len(rays) == 10 and colors.shape == (10, 3)


def test_written_dataset_reads_back(tmp_path):
    writer = RunWriter(str(tmp_path / "data"))
    made = make_dataset(load_scene("shapes"), small_rig(), writer, quadrature=512, seed=4)
    read = read_dataset(str(tmp_path / "data"), with_depth=True)
    assert len(read) == 3
    for a, b in zip(made.images, read.images):
        assert np.array_equal(a, b)
    assert np.allclose(read.depths[0], made.depths[0], atol=1e-5)
    assert np.array_equal(read.cameras[2].pose, made.cameras[2].pose)
    assert read.manifest["seed"] == 4


def test_same_seed_gives_identical_files(tmp_path):
    for name in ("a", "b"):
        make_dataset(
            load_scene("shapes"), small_rig(), RunWriter(str(tmp_path / name)), quadrature=512
        )
    for name in ("images/000.png", "depth/001.depth", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_ground_truth_quadrature_converges():
    oracle = load_scene("shapes")
    camera = Camera.look_at([2.0, -2.0, 1.5], [0.0, 0.0, 0.0], width=16, height=16)
    coarse = render_image(camera, oracle, StratifiedSampler(512, jitter=False))
    fine = render_image(camera, oracle, StratifiedSampler(1024, jitter=False))
    assert np.max(np.abs(coarse.rgb - fine.rgb)) < 1e-3
