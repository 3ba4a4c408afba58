import numpy as np
from PIL import Image

from ..errors import ConfigurationError
from .formats import DEPTH_HEADER, DEPTH_MAGIC, DEPTH_VERSION


__all__ = ["to_uint8", "write_png", "write_ppm", "write_depth"]


def to_uint8(rgb):
    """Clips colors to [0, 1] and rounds them to 8 bits."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ConfigurationError(f"Images must be (H, W, 3), got {rgb.shape}")
    return np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(file_path, rgb):
    Image.fromarray(to_uint8(rgb)).save(file_path, format="PNG")


def write_ppm(file_path, rgb):
    """ASCII PPM (P3), one pixel row per line."""
    pixels = to_uint8(rgb)
    height, width = pixels.shape[:2]
    lines = ["P3", f"{width} {height}", "255"]
    for row in pixels:
        lines.append(" ".join(str(int(v)) for v in row.reshape(-1)))
    with open(file_path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def write_depth(file_path, depth):
    """Depth map: magic, version, width, height, then float32 values row by row."""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ConfigurationError(f"Depth maps must be (H, W), got {depth.shape}")
    height, width = depth.shape
    with open(file_path, "wb") as f:
        f.write(DEPTH_MAGIC)
        f.write(DEPTH_HEADER.pack(DEPTH_VERSION, width, height))
        f.write(depth.astype("<f4").tobytes(order="C"))
