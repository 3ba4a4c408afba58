"""
Checkpoints and grid snapshots.

Both files are an 8-byte magic, a uint32 format version, a uint64 header length, a JSON header
and raw little-endian float64 blocks. The header is written with sorted keys and without
timestamps, so writing the same state twice gives identical bytes.
"""

import json

import numpy as np

from .formats import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    GRID_MAGIC,
    GRID_VERSION,
    UINT32,
    UINT64,
)
from .tables import to_jsonable


__all__ = ["write_checkpoint", "write_grid_snapshot"]


def _write_container(file_path, magic, version, header, blocks):
    header_bytes = json.dumps(
        to_jsonable(header), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    with open(file_path, "wb") as f:
        f.write(magic)
        f.write(UINT32.pack(version))
        f.write(UINT64.pack(len(header_bytes)))
        f.write(header_bytes)
        for block in blocks:
            f.write(np.ascontiguousarray(block, dtype="<f8").tobytes(order="C"))


def write_checkpoint(file_path, store, kind, **kwargs):
    """
    Writes every parameter of a ParamStore, optionally with its Adam moments.

    Args:
        file_path (str): Output path
        store (ParamStore): Parameters in registration order
        kind (str): "occupancy" or "radiance", checked when loading
        config (dict, optional): Resolved experiment config echoed into the header
        extra (dict, optional): Free-form metadata (network sizes, input hashes)
        moments (bool, optional): Store the Adam moments too. Defaults to True.
    """
    moments = kwargs.get("moments", True)
    roles = ["value", "first_moment", "second_moment"] if moments else ["value"]
    sources = {
        "value": {name: p.data for name, p in store.params.items()},
        "first_moment": store.first_moment,
        "second_moment": store.second_moment,
    }
    tensors = []
    blocks = []
    offset = 0
    for name in store.params:
        for role in roles:
            block = sources[role][name]
            tensors.append(
                {
                    "name": name,
                    "role": role,
                    "shape": list(block.shape),
                    "offset": offset,
                }
            )
            blocks.append(block)
            offset += 8 * block.size
    header = {
        "format": "occlab-checkpoint",
        "kind": kind,
        "step": int(store.step),
        "seed": store.seed,
        "tensors": tensors,
        "config": kwargs.get("config") or {},
        "extra": kwargs.get("extra") or {},
    }
    _write_container(file_path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, header, blocks)


def write_grid_snapshot(file_path, grid, **kwargs):
    """Writes the grid header (R, bounds, decay, threshold) and its value array."""
    header = dict(grid.header())
    header["format"] = "occlab-grid"
    header["config"] = kwargs.get("config") or {}
    header["extra"] = kwargs.get("extra") or {}
    _write_container(file_path, GRID_MAGIC, GRID_VERSION, header, [grid.values])
