import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .compositing import composite_arrays
from .rays import clip_to_bounds, generate_rays
from .sampling import StratifiedSampler

logger = logging.getLogger(__name__)

__all__ = ["RenderedImage", "render_rays", "render_image"]


class RenderedImage:
    """An image produced by render_image, with optional depth and opacity maps."""

    def __init__(self, rgb, depth=None, opacity=None, **kwargs):
        self.rgb = rgb
        self.depth = depth
        self.opacity = opacity
        self.field_evaluations = kwargs.get("field_evaluations", 0)
        self.coarse_evaluations = kwargs.get("coarse_evaluations", 0)

    def __repr__(self):
        height, width = self.rgb.shape[:2]
        return f"occlab RenderedImage - {width}x{height}"

    @property
    def width(self):
        return self.rgb.shape[1]

    @property
    def height(self):
        return self.rgb.shape[0]


def render_rays(rays, source, sampler, rng=None, background=(0.0, 0.0, 0.0)):
    """
    Samples, queries and composites one bundle of rays.

    Args:
        rays (RayBundle): Rays already clipped to the scene bounds
        source: Anything with `query(positions, directions)` returning density and color
            first, such as a SceneOracle or a trained field
        sampler (callable): (rays, rng) -> SampleBatch
        rng (np.random.Generator, optional): Sampling jitter
        background (tuple, optional): Color of rays that hit nothing. Defaults to black.

    Returns:
        tuple: (CompositeResult, SampleBatch)
    """
    samples = sampler(rays, rng)
    if len(samples):
        queried = source.query(samples.positions, samples.directions)
        sigma, rgb = queried[0], queried[1]
    else:
        sigma, rgb = np.zeros(0), np.zeros((0, 3))
    empty_rays = int(np.sum(samples.counts == 0))
    if empty_rays:
        logger.debug("%d of %d rays have no samples and show the background", empty_rays, len(rays))
    result = composite_arrays(
        sigma, rgb, samples.deltas, samples.ray_offsets, background, samples.t
    )
    return result, samples


def render_image(camera, source, sampler=None, **kwargs):
    """
    Renders a full image by compositing every pixel's ray.

    Args:
        camera (Camera): Pose and intrinsics
        source: Density/color source with a `query` method
        sampler (callable, optional): Defaults to 128 stratified samples without jitter
        bounds (tuple, optional): Scene cube. Defaults to (-1, 1).
        background (tuple, optional): Defaults to black.
        chunk (int, optional): Rays per work item. Defaults to 4096.
        threads (int, optional): Worker threads. Defaults to 1.
        seed (int, optional): Seed for sampling jitter. Defaults to 0.

    Returns:
        RenderedImage: rgb (H, W, 3), depth (H, W) and opacity (H, W)
    """
    sampler = sampler or StratifiedSampler(128, jitter=False)
    bounds = kwargs.get("bounds", (-1.0, 1.0))
    background = kwargs.get("background", (0.0, 0.0, 0.0))
    chunk = kwargs.get("chunk", 4096)
    threads = kwargs.get("threads", 1)
    seed = kwargs.get("seed", 0)

    rays = clip_to_bounds(generate_rays(camera), bounds)
    starts = list(range(0, len(rays), chunk))

    def work(item):
        i, lo = item
        rng = np.random.default_rng([seed, i])
        return render_rays(rays.subset(slice(lo, lo + chunk)), source, sampler, rng, background)

    items = list(enumerate(starts))
    if threads > 1:
        # map keeps submission order, so the output does not depend on scheduling
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, items))
    else:
        parts = [work(item) for item in items]

    shape = (camera.height, camera.width)
    rgb = np.concatenate([p[0].color for p in parts]).reshape(shape + (3,))
    depth = np.concatenate([p[0].depth for p in parts]).reshape(shape)
    opacity = np.concatenate([p[0].opacity for p in parts]).reshape(shape)
    return RenderedImage(
        rgb,
        depth,
        opacity,
        field_evaluations=sum(len(p[1]) for p in parts),
        coarse_evaluations=sum(p[1].coarse_evaluations for p in parts),
    )
