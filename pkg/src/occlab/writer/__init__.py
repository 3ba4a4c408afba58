"""
Writers for every file occlab produces: PNG and PPM images, depth maps, PLY point clouds, CSV
tables, JSON manifests, checkpoints and grid snapshots. RunWriter ties them to one output
directory and records what was written.
"""

from .images import to_uint8, write_png, write_ppm, write_depth
from .pointcloud import write_ply
from .tables import format_cell, write_csv, write_json, to_jsonable
from .binary import write_checkpoint, write_grid_snapshot
from .run import RunWriter

__all__ = [
    "to_uint8",
    "write_png",
    "write_ppm",
    "write_depth",
    "write_ply",
    "format_cell",
    "write_csv",
    "write_json",
    "to_jsonable",
    "write_checkpoint",
    "write_grid_snapshot",
    "RunWriter",
]
