import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.scene import (
    Primitive,
    SceneOracle,
    available_scenes,
    load_scene,
    oracle_occupancy_grid,
)


def sphere_scene(**kwargs):
    return SceneOracle([Primitive("sphere", radius=0.5, **kwargs)])


def test_sphere_density_inside_and_outside():
    oracle = sphere_scene(sigma0=50.0, falloff=0.02)
    assert oracle.density([[0.0, 0.0, 0.0]])[0] == pytest.approx(50.0, rel=1e-6)
    assert oracle.density([[0.5, 0.0, 0.0]])[0] == pytest.approx(25.0)
    assert oracle.density([[0.9, 0.0, 0.0]])[0] == pytest.approx(0.0, abs=1e-6)


def test_density_is_exactly_zero_past_the_cutoff():
    oracle = SceneOracle([Primitive("sphere", radius=0.1, sigma0=50.0, falloff=0.02)])
    # 0.8 outside the surface is 40 falloff widths
    assert oracle.density([[0.9, 0.0, 0.0]])[0] == 0.0
    assert oracle.density([[0.6, 0.0, 0.0]])[0] > 0.0


def test_color_follows_nearest_visible_primitive():
    oracle = SceneOracle(
        [
            Primitive("sphere", center=(-0.5, 0.0, 0.0), radius=0.2, albedo=(1.0, 0.0, 0.0)),
            Primitive("box", center=(0.5, 0.0, 0.0), albedo=(0.0, 0.0, 1.0)),
        ]
    )
    _, color = oracle.density_color([[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.9, 0.0]])
    assert color.tolist() == [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]


def test_overlapping_primitives_are_capped():
    oracle = SceneOracle([Primitive("sphere", sigma0=10.0), Primitive("box", sigma0=20.0)])
    assert oracle.density([[0.0, 0.0, 0.0]])[0] == pytest.approx(20.0)


def test_empty_scene_has_no_occupancy():
    assert not oracle_occupancy_grid(SceneOracle([]), 8).any()


def test_sphere_voxelization_matches_volume():
    oracle = sphere_scene(sigma0=1.0, falloff=0.02)
    count = int(oracle_occupancy_grid(oracle, 32).sum())
    expected = (4.0 / 3.0) * np.pi * 0.5**3 / 8.0 * 32**3
    assert abs(count - expected) / expected < 0.05


@pytest.mark.parametrize("resolution", [8, 16])
def test_refined_grid_is_consistent(resolution):
    oracle = sphere_scene(sigma0=1.0, falloff=0.02)
    coarse = oracle_occupancy_grid(oracle, resolution)
    fine = oracle_occupancy_grid(oracle, 2 * resolution)
    blocks = fine.reshape(resolution, 2, resolution, 2, resolution, 2).any(axis=(1, 3, 5))
    assert np.all(blocks[coarse])


def test_oracle_grid_needs_resolution_eight():
    with pytest.raises(ConfigurationError):
        oracle_occupancy_grid(SceneOracle([]), 4)


def test_density_respects_lipschitz_bound():
    oracle = load_scene("desk")
    rng = np.random.default_rng(0)
    a = rng.uniform(-1.0, 1.0, (2000, 3))
    b = a + rng.normal(scale=0.01, size=a.shape)
    change = np.abs(oracle.density(a) - oracle.density(b))
    assert np.all(change <= oracle.lipschitz_bound * np.linalg.norm(a - b, axis=1) + 1e-9)


def test_desk_library():
    oracle = load_scene("desk")
    assert [p.name for p in oracle.primitives] == ["ground", "ball", "block"]
    assert all(p.sigma0 == 50.0 for p in oracle.primitives)
    assert oracle.primitives[0].half_size[2] == pytest.approx(0.05)
    assert "shapes" in available_scenes()


def test_scene_threshold_override():
    assert load_scene("shapes", gt_threshold=2.0).gt_threshold == 2.0


def test_unknown_scene_and_primitive():
    with pytest.raises(ConfigurationError):
        load_scene("no-such-scene")
    with pytest.raises(ConfigurationError):
        Primitive("cone")


def test_library_file_by_path(tmp_path):
    library = tmp_path / "pair.toml"
    library.write_text(
        '[scene]\nprimitives = ["a"]\n\n'
        '[base]\nkind = "box"\nsigma0 = 7.0\n\n'
        '[a]\ninherit = "base"\ncenter = [0.1, 0.0, 0.0]\n'
    )
    oracle = load_scene(str(library))
    assert len(oracle.primitives) == 1
    assert oracle.primitives[0].sigma0 == 7.0
    assert oracle.primitives[0].kind == "box"


def test_dict_roundtrip():
    oracle = load_scene("desk")
    again = SceneOracle.from_dict(oracle.as_dict())
    points = np.random.default_rng(1).uniform(-1.0, 1.0, (100, 3))
    assert np.array_equal(again.density(points), oracle.density(points))
