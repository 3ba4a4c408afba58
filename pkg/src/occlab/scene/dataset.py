import logging

import numpy as np
from tqdm import tqdm

from ..errors import ConfigurationError, require
from ..rendering.rays import RayBundle, clip_to_bounds, generate_rays
from ..rendering.renderer import render_image
from ..rendering.sampling import StratifiedSampler
from ..writer.images import to_uint8

logger = logging.getLogger(__name__)

__all__ = ["Dataset", "make_dataset", "image_name", "depth_name"]


def image_name(index):
    return f"images/{index:03d}.png"


def depth_name(index):
    return f"depth/{index:03d}.depth"


class Dataset:
    """
    Posed ground-truth images of one scene, split into training and validation cameras.

    Images are stored as 8-bit values scaled to [0, 1], exactly as they come back from the PNG
    files, so a generated dataset and the same dataset read from disk are interchangeable.
    """

    def __init__(self, cameras, images, depths=None, **kwargs):
        """
        Args:
            cameras (list): Camera objects
            images (list): (H, W, 3) arrays in [0, 1]
            depths (list, optional): (H, W) expected ray depths
            val_stride (int, optional): Every val_stride-th camera is held out. Defaults to 8.
            bounds (tuple, optional): Scene cube. Defaults to (-1, 1).
            background (list, optional): Background color. Defaults to black.
            manifest (dict, optional): The manifest the dataset was written with
        """
        if len(cameras) != len(images):
            raise ConfigurationError("Dataset needs one image per camera")
        self.cameras = list(cameras)
        self.images = [np.asarray(image, dtype=np.float64) for image in images]
        self.depths = depths
        self.val_stride = int(kwargs.get("val_stride", 8))
        self.bounds = tuple(kwargs.get("bounds", (-1.0, 1.0)))
        self.background = tuple(kwargs.get("background", (0.0, 0.0, 0.0)))
        self.manifest = kwargs.get("manifest", {})
        self.val_indices = [i for i in range(len(self.cameras)) if i % self.val_stride == 0]
        self.train_indices = [
            i for i in range(len(self.cameras)) if i % self.val_stride != 0
        ]
        if not self.train_indices:
            self.train_indices = list(self.val_indices)
        self._pools = {}

    def __repr__(self):
        return (
            f"occlab Dataset - {len(self.train_indices)} train / "
            f"{len(self.val_indices)} val cameras"
        )

    def __len__(self):
        return len(self.cameras)

    def ray_pool(self, split="train"):
        """All pixel rays of one split, clipped to the bounds, with their target colors."""
        if split not in self._pools:
            indices = self.train_indices if split == "train" else self.val_indices
            origins, directions, colors = [], [], []
            for i in indices:
                rays = generate_rays(self.cameras[i])
                origins.append(rays.origins)
                directions.append(rays.directions)
                colors.append(self.images[i].reshape(-1, 3))
            rays = clip_to_bounds(
                RayBundle(np.concatenate(origins), np.concatenate(directions)), self.bounds
            )
            self._pools[split] = (rays, np.concatenate(colors))
        return self._pools[split]

    def sample_rays(self, rng, count, split="train"):
        """Draws `count` random pixel rays (with replacement) and their colors."""
        rays, colors = self.ray_pool(split)
        index = rng.integers(0, len(rays), size=count)
        return rays.subset(index), colors[index]


def make_dataset(oracle, rig, writer=None, **kwargs):
    """
    Renders ground-truth images and depth maps of an oracle scene by dense compositing.

    Args:
        oracle (SceneOracle): The scene
        rig (CameraRig): The cameras
        writer (RunWriter, optional): When given, images, depth maps and manifest.json are
            written through it
        quadrature (int, optional): Samples per ray, at least 512. Defaults to 1024.
        bounds (tuple, optional): Scene cube. Defaults to (-1, 1).
        background (tuple, optional): Defaults to black.
        val_stride (int, optional): Validation hold-out stride. Defaults to 8.
        seed (int, optional): Recorded in the manifest and used for render seeding
        threads (int, optional): Worker threads per image. Defaults to 1.
        progress (bool, optional): Show a progress bar. Defaults to False.

    Returns:
        Dataset: The rendered images and cameras
    """
    quadrature = int(kwargs.get("quadrature", 1024))
    require(quadrature >= 512, "ground-truth quadrature needs at least 512 samples per ray")
    bounds = tuple(kwargs.get("bounds", (-1.0, 1.0)))
    background = tuple(kwargs.get("background", (0.0, 0.0, 0.0)))
    val_stride = int(kwargs.get("val_stride", 8))
    seed = int(kwargs.get("seed", 0))
    sampler = StratifiedSampler(quadrature, jitter=False)

    images, depths = [], []
    cameras = tqdm(
        list(rig), desc="rendering ground truth", disable=not kwargs.get("progress", False)
    )
    for i, camera in enumerate(cameras):
        rendered = render_image(
            camera,
            oracle,
            sampler,
            bounds=bounds,
            background=background,
            threads=kwargs.get("threads", 1),
            seed=seed,
        )
        image = to_uint8(rendered.rgb) / 255.0
        images.append(image)
        depths.append(rendered.depth)
        if writer is not None:
            writer.png(image_name(i), image)
            writer.depth(depth_name(i), rendered.depth)
    logger.info("rendered %d ground-truth images at %d samples per ray", len(images), quadrature)

    manifest = {
        "kind": "dataset",
        "seed": seed,
        "quadrature": quadrature,
        "bounds": list(bounds),
        "background": list(background),
        "val_stride": val_stride,
        "gt_threshold": oracle.gt_threshold,
        "scene": oracle.as_dict(),
        "rig": rig.as_dict(),
        "cameras": [
            {"image": image_name(i), "depth": depth_name(i), **camera.as_dict()}
            for i, camera in enumerate(rig)
        ],
    }
    if writer is not None:
        writer.manifest(manifest)
    return Dataset(
        list(rig),
        images,
        depths,
        val_stride=val_stride,
        bounds=bounds,
        background=background,
        manifest=manifest,
    )
