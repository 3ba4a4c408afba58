"""
Conversions from the different occupancy estimates to boolean grids that can be compared
cell by cell: the frozen occupancy network, the momentum grid and rendered depth maps.
"""

import logging

import numpy as np

from ..errors import require
from ..grid import cell_centers
from ..rendering.rays import generate_rays
from ..rendering.renderer import render_image

logger = logging.getLogger(__name__)

__all__ = ["network_to_grid", "resample_grid", "depth_to_grid", "render_depth_grid"]


def network_to_grid(predict_occupied, resolution, bounds=(-1.0, 1.0), **kwargs):
    """
    Samples a point-occupancy predicate on a grid.

    Args:
        predict_occupied (callable): (M, 3) -> (M,) booleans, e.g. OccupancyField.predict_occupied
        resolution (int): Cells per axis
        bounds (tuple, optional): Cube extent
        probes (int, optional): Points tested per cell; the cell is occupied when any is.
            Defaults to 1.
        jitter (bool, optional): Probe uniform points in the cell instead of the center.
            Defaults to False.
        rng (np.random.Generator, optional): Jitter source

    Returns:
        np.ndarray: (R, R, R) booleans
    """
    probes = int(kwargs.get("probes", 1))
    jitter = kwargs.get("jitter", False)
    rng = kwargs.get("rng") or np.random.default_rng(0)
    require(probes >= 1, "network_to_grid needs at least one probe per cell")
    centers = cell_centers(resolution, bounds)
    size = (bounds[1] - bounds[0]) / resolution
    occupied = np.zeros(centers.shape[0], dtype=bool)
    for probe in range(probes):
        if jitter:
            points = centers + (rng.random(centers.shape) - 0.5) * size
        elif probe == 0:
            points = centers
        else:
            break
        occupied |= np.asarray(predict_occupied(points), dtype=bool)
    return occupied.reshape((resolution,) * 3)


def resample_grid(grid, resolution, bounds=(-1.0, 1.0)):
    """Binary occupancy of an OccGrid looked up at the cell centers of another resolution."""
    if grid.resolution == resolution and tuple(grid.bounds) == tuple(bounds):
        return grid.binary.copy()
    return grid.query(cell_centers(resolution, bounds)).reshape((resolution,) * 3)


def depth_to_grid(cameras, renders, resolution, bounds=(-1.0, 1.0), min_opacity=0.5):
    """
    Marks the cell containing the surface point of every sufficiently opaque pixel.

    The surface point of a pixel is origin + direction * depth / opacity, i.e. the expected
    termination depth of the ray given that it terminates. Pixels with opacity below
    `min_opacity` and points outside the bounds are ignored.

    Args:
        cameras (list): Cameras the depth maps were rendered from
        renders (list): RenderedImage objects with depth and opacity
        resolution (int): Cells per axis
        bounds (tuple, optional): Cube extent
        min_opacity (float, optional): Opacity needed to count as a surface hit

    Returns:
        np.ndarray: (R, R, R) booleans
    """
    grid = np.zeros((resolution,) * 3, dtype=bool)
    size = (bounds[1] - bounds[0]) / resolution
    marked = 0
    for camera, render in zip(cameras, renders):
        rays = generate_rays(camera)
        opacity = render.opacity.reshape(-1)
        depth = render.depth.reshape(-1)
        hit = opacity >= min_opacity
        points = rays.origins[hit] + rays.directions[hit] * (depth[hit] / opacity[hit])[:, None]
        inside = np.all((points >= bounds[0]) & (points <= bounds[1]), axis=1)
        index = np.clip(
            np.floor((points[inside] - bounds[0]) / size).astype(np.int64), 0, resolution - 1
        )
        grid[index[:, 0], index[:, 1], index[:, 2]] = True
        marked += int(inside.sum())
    logger.debug("depth_to_grid marked cells from %d surface points", marked)
    return grid


def render_depth_grid(cameras, source, sampler, resolution, **kwargs):
    """Renders depth from every camera with `source` and converts it with depth_to_grid."""
    bounds = tuple(kwargs.get("bounds", (-1.0, 1.0)))
    renders = [
        render_image(
            camera,
            source,
            sampler,
            bounds=bounds,
            threads=kwargs.get("threads", 1),
            seed=kwargs.get("seed", 0),
        )
        for camera in cameras
    ]
    return depth_to_grid(
        cameras, renders, resolution, bounds, kwargs.get("min_opacity", 0.5)
    )
