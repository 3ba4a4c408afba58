import numpy as np
from PIL import Image

from ..errors import ConfigurationError
from ..writer.formats import DEPTH_HEADER, DEPTH_MAGIC, DEPTH_VERSION


__all__ = ["read_png", "read_depth"]


def read_png(file_path):
    """Loads an image as float64 RGB in [0, 1]."""
    try:
        with Image.open(file_path) as image:
            pixels = np.asarray(image.convert("RGB"), dtype=np.float64)
    except OSError as e:
        raise ConfigurationError(f"Failed to read image {file_path}: {e}") from e
    return pixels / 255.0


def read_depth(file_path):
    try:
        with open(file_path, "rb") as f:
            content = f.read()
    except OSError as e:
        raise ConfigurationError(f"Failed to read depth map {file_path}: {e}") from e
    if content[: len(DEPTH_MAGIC)] != DEPTH_MAGIC:
        raise ConfigurationError(f"{file_path} is not an occlab depth map")
    if len(content) < len(DEPTH_MAGIC) + DEPTH_HEADER.size:
        raise ConfigurationError(f"{file_path} is truncated inside its header")
    version, width, height = DEPTH_HEADER.unpack_from(content, len(DEPTH_MAGIC))
    if version != DEPTH_VERSION:
        raise ConfigurationError(f"{file_path} has depth format version {version}")
    start = len(DEPTH_MAGIC) + DEPTH_HEADER.size
    if len(content) - start != 4 * width * height:
        raise ConfigurationError(f"{file_path} is truncated")
    values = np.frombuffer(content, dtype="<f4", offset=start)
    return values.reshape(height, width).astype(np.float64)
