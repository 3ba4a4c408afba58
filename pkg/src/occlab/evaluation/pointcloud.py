import logging

import numpy as np

from ..errors import ConfigurationError
from .stats import sample_alpha

logger = logging.getLogger(__name__)

__all__ = ["export_pointcloud", "field_pointcloud", "POINTCLOUD_MODES"]

POINTCLOUD_MODES = ("rgb", "rgba")


def export_pointcloud(writer, prefix, positions, sigma, rgb, deltas, **kwargs):
    """
    Writes sampled points as PLY files, one per routing branch.

    Args:
        writer (RunWriter): Destination
        prefix (str): File name prefix, e.g. "pointcloud/step_5000"
        positions (np.ndarray): (S, 3) sample positions
        sigma (np.ndarray): (S,) densities
        rgb (np.ndarray): (S, 3) colors in [0, 1]
        deltas (np.ndarray): (S,) sample spacings, for the alpha channel
        routed_to_empty (np.ndarray, optional): (S,) booleans. When given, scene-routed and
            empty-routed points go to `<prefix>_scene_<mode>.ply` and
            `<prefix>_empty_<mode>.ply`; otherwise all points go to `<prefix>_<mode>.ply`.
        mode (str, optional): "rgb" or "rgba"; "rgba" adds alpha = 1 - exp(-sigma * delta).
            Defaults to "rgba".

    Returns:
        list: Paths of the written files
    """
    mode = kwargs.get("mode", "rgba")
    if mode not in POINTCLOUD_MODES:
        raise ConfigurationError(f"Point cloud mode must be one of {POINTCLOUD_MODES}")
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    rgb = np.asarray(rgb, dtype=np.float64).reshape(-1, 3)
    alpha = sample_alpha(sigma, deltas)
    routed_to_empty = kwargs.get("routed_to_empty")

    if routed_to_empty is None:
        parts = [(f"{prefix}_{mode}.ply", np.ones(positions.shape[0], dtype=bool))]
    else:
        empty = np.asarray(routed_to_empty, dtype=bool).reshape(-1)
        parts = [(f"{prefix}_scene_{mode}.ply", ~empty), (f"{prefix}_empty_{mode}.ply", empty)]

    written = []
    for name, keep in parts:
        written.append(
            writer.ply(
                name,
                positions[keep],
                rgb[keep],
                alpha[keep] if mode == "rgba" else None,
                comment=f"occlab {mode} point cloud, alpha = 1 - exp(-sigma * delta)",
            )
        )
        logger.info("wrote %d points to %s", int(keep.sum()), name)
    return written


def field_pointcloud(field, rays, sampler, rng=None):
    """
    Samples a field along rays and returns what export_pointcloud needs.

    Returns:
        dict: positions, sigma, rgb, deltas and routed_to_empty of every sample
    """
    samples = sampler(rays, rng)
    sigma, rgb, empty = field.query(samples.positions, samples.directions)
    return {
        "positions": samples.positions,
        "sigma": sigma,
        "rgb": rgb,
        "deltas": samples.deltas,
        "routed_to_empty": empty,
    }
