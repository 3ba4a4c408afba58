import json
from os import path

from ..errors import ConfigurationError
from ..rendering.rays import Camera
from ..scene.dataset import Dataset
from .images import read_depth, read_png


__all__ = ["read_manifest", "read_dataset"]


def read_manifest(directory):
    file_name = path.join(directory, "manifest.json")
    if not path.isfile(file_name):
        raise ConfigurationError(f"No manifest.json in {directory}; run generate-scene first")
    try:
        with open(file_name) as f:
            return json.load(f)
    except ValueError as e:
        raise ConfigurationError(f"Failed to parse {file_name}: {e}") from e


def read_dataset(directory, with_depth=False):
    """
    Loads a dataset directory written by make_dataset.

    Args:
        directory (str): Dataset directory holding manifest.json
        with_depth (bool, optional): Also load the depth maps. Defaults to False.

    Returns:
        Dataset: Cameras, images and the train/validation split of the manifest
    """
    manifest = read_manifest(directory)
    if manifest.get("kind") != "dataset":
        raise ConfigurationError(f"{directory} does not hold a dataset manifest")
    cameras, images, depths = [], [], []
    for entry in manifest["cameras"]:
        entry = dict(entry)
        image_file = entry.pop("image")
        depth_file = entry.pop("depth")
        cameras.append(Camera.from_dict(entry))
        images.append(read_png(path.join(directory, image_file)))
        if with_depth:
            depths.append(read_depth(path.join(directory, depth_file)))
    return Dataset(
        cameras,
        images,
        depths if with_depth else None,
        val_stride=manifest["val_stride"],
        bounds=tuple(manifest["bounds"]),
        background=tuple(manifest["background"]),
        manifest=manifest,
    )
