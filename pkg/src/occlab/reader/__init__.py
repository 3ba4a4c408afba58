"""
Readers for the files occlab writes: datasets (manifest, PNG images, depth maps), checkpoints
and grid snapshots. Malformed or missing files raise ConfigurationError.
"""

from .images import read_png, read_depth
from .binary import Checkpoint, read_checkpoint, read_grid_snapshot
from .dataset import read_manifest, read_dataset

__all__ = [
    "read_png",
    "read_depth",
    "Checkpoint",
    "read_checkpoint",
    "read_grid_snapshot",
    "read_manifest",
    "read_dataset",
]
