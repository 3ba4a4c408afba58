"""Rays, samplers, compositing and image rendering."""

from .rays import Camera, RayBundle, generate_rays, clip_to_bounds
from .sampling import (
    SampleBatch,
    stratified_sample,
    guided_sample,
    split_sample,
    StratifiedSampler,
    GuidedSampler,
)
from .compositing import CompositeResult, composite_arrays, composite
from .renderer import RenderedImage, render_rays, render_image
