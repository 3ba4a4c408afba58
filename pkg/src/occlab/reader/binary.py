"""
Readers for checkpoints and grid snapshots written by occlab.writer.binary.

Any structural problem (wrong magic, unsupported version, truncated data, header mismatch)
raises ConfigurationError, which the command line maps to exit code 2.
"""

import json

import numpy as np

from ..errors import ConfigurationError
from ..grid import OccGrid
from ..writer.formats import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    GRID_MAGIC,
    GRID_VERSION,
    UINT32,
    UINT64,
)


__all__ = ["Checkpoint", "read_checkpoint", "read_grid_snapshot"]


def _read_container(file_path, magic, version):
    try:
        with open(file_path, "rb") as f:
            content = f.read()
    except OSError as e:
        raise ConfigurationError(f"Failed to read {file_path}: {e}") from e
    if content[: len(magic)] != magic:
        raise ConfigurationError(f"{file_path} is not an occlab file of the expected kind")
    pos = len(magic)
    try:
        (found_version,) = UINT32.unpack_from(content, pos)
        pos += UINT32.size
        (header_len,) = UINT64.unpack_from(content, pos)
        pos += UINT64.size
        header = json.loads(content[pos : pos + header_len].decode("utf-8"))
    except Exception as e:
        raise ConfigurationError(f"Failed to parse header of {file_path}: {e}") from e
    if found_version != version:
        raise ConfigurationError(
            f"{file_path} has format version {found_version}, expected {version}"
        )
    if not isinstance(header, dict):
        raise ConfigurationError(f"Header of {file_path} is not a table")
    return header, content[pos + header_len :]


def _block(data, offset, shape, file_path):
    count = int(np.prod(shape)) if shape else 1
    end = offset + 8 * count
    if end > len(data):
        raise ConfigurationError(f"{file_path} is truncated")
    return np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy()


class Checkpoint:
    """
    The content of a checkpoint file.

    Attributes:
        header (dict): Kind, step, seed, resolved config and extra metadata
        values (dict): name -> parameter array
        first_moment (dict or None): name -> Adam first moment
        second_moment (dict or None): name -> Adam second moment
    """

    def __init__(self, header, values, first_moment=None, second_moment=None):
        self.header = header
        self.values = values
        self.first_moment = first_moment
        self.second_moment = second_moment

    def __repr__(self):
        return f"occlab Checkpoint - {self.kind} at step {self.step}"

    @property
    def kind(self):
        return self.header["kind"]

    @property
    def step(self):
        return int(self.header["step"])

    @property
    def config(self):
        return self.header.get("config", {})

    @property
    def extra(self):
        return self.header.get("extra", {})

    def load_into(self, store, moments=True):
        """Copies the parameters (and moments when present) into a matching ParamStore."""
        store.load_state(
            self.values,
            self.first_moment if moments else None,
            self.second_moment if moments else None,
            self.step,
        )
        return store


def read_checkpoint(file_path, kind=None):
    """
    Args:
        file_path (str): Checkpoint path
        kind (str, optional): Expected kind; a different kind raises ConfigurationError

    Returns:
        Checkpoint: Header, parameter values and Adam moments
    """
    header, data = _read_container(file_path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    if kind is not None and header.get("kind") != kind:
        raise ConfigurationError(
            f"{file_path} holds a '{header.get('kind')}' checkpoint, expected '{kind}'"
        )
    groups = {"value": {}, "first_moment": {}, "second_moment": {}}
    try:
        layout = [
            (t["role"], t["name"], int(t["offset"]), tuple(int(s) for s in t["shape"]))
            for t in header["tensors"]
        ]
    except Exception as e:
        raise ConfigurationError(f"Failed to parse tensor table of {file_path}: {e}") from e
    for role, name, offset, shape in layout:
        if role not in groups:
            raise ConfigurationError(f"{file_path} lists tensor {name} with unknown role {role}")
        groups[role][name] = _block(data, offset, shape, file_path)
    return Checkpoint(
        header,
        groups["value"],
        groups["first_moment"] or None,
        groups["second_moment"] or None,
    )


def read_grid_snapshot(file_path):
    """Rebuilds an OccGrid, binary occupancy included, from a snapshot file."""
    header, data = _read_container(file_path, GRID_MAGIC, GRID_VERSION)
    try:
        resolution = int(header["resolution"])
    except Exception as e:
        raise ConfigurationError(f"Failed to parse grid header of {file_path}: {e}") from e
    values = _block(data, 0, (resolution,) * 3, file_path)
    try:
        return OccGrid.from_snapshot(header, values)
    except KeyError as e:
        raise ConfigurationError(f"Grid header of {file_path} has no {e}") from e
