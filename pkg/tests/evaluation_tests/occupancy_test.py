import numpy as np

from occlab.evaluation import depth_to_grid, network_to_grid, render_depth_grid, resample_grid
from occlab.grid import OccGrid, cell_centers
from occlab.rendering import Camera, RenderedImage, StratifiedSampler
from occlab.scene import Primitive, SceneOracle


def test_network_to_grid_uses_cell_centers():
    grid = network_to_grid(lambda p: p[:, 0] > 0.0, 4)
    assert grid.shape == (4, 4, 4)
    assert grid[2:].all() and not grid[:2].any()


def test_jittered_probes_stay_in_cells():
    seen = []

    def predicate(points):
        seen.append(points)
        return np.zeros(len(points), dtype=bool)

    network_to_grid(predicate, 2, probes=3, jitter=True, rng=np.random.default_rng(0))
    assert len(seen) == 3
    points = np.concatenate(seen)
    assert np.all(np.abs(points) <= 1.0)


def test_resample_grid():
    grid = OccGrid(4, initial_value=0.0)
    grid.update(lambda p: (p[:, 2] > 0.0).astype(float), jitter=False)
    same = resample_grid(grid, 4)
    assert np.array_equal(same, grid.binary)
    assert same is not grid.binary
    finer = resample_grid(grid, 8)
    assert np.array_equal(finer, np.repeat(np.repeat(np.repeat(grid.binary, 2, 0), 2, 1), 2, 2))


def test_depth_to_grid_marks_surface_cells():
    pose = np.eye(4)
    pose[2, 3] = 3.0
    camera = Camera(pose, width=3, height=3)
    depth = np.zeros((3, 3))
    opacity = np.zeros((3, 3))
    depth[1, 1], opacity[1, 1] = 1.25, 0.5
    depth[0, 0], opacity[0, 0] = 1.0, 0.4
    render = RenderedImage(np.zeros((3, 3, 3)), depth, opacity)
    grid = depth_to_grid([camera], [render], 4)
    assert grid.sum() == 1
    assert grid[2, 2, 3]


def test_oracle_depth_grid_finds_the_sphere():
    oracle = SceneOracle([Primitive("sphere", radius=0.5)])
    cameras = [
        Camera.look_at(eye, [0.0, 0.0, 0.0], width=16, height=16)
        for eye in ([3.0, 0.0, 1.0], [-3.0, 0.5, 1.0], [0.0, 3.0, -1.0])
    ]
    grid = render_depth_grid(cameras, oracle, StratifiedSampler(256, jitter=False), 16)
    assert grid.any()
    radius = np.linalg.norm(cell_centers(16)[grid.reshape(-1)], axis=1)
    half_diagonal = np.sqrt(3.0) * 0.0625
    assert np.all(np.abs(radius - 0.5) <= half_diagonal + 0.05)
