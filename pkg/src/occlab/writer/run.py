import logging
import os
from os import path

from .. import __version__
from ..errors import ConfigurationError
from .binary import write_checkpoint, write_grid_snapshot
from .images import write_depth, write_png, write_ppm
from .pointcloud import write_ply
from .tables import write_csv, write_json

logger = logging.getLogger(__name__)

__all__ = ["RunWriter"]


class RunWriter:
    """
    Writes the artifacts of one command into an output directory and keeps the list of what
    was written for the run manifest.

    Example:
        writer = RunWriter("runs/desk/occupancy", config=config, force=True)
        writer.csv("train_log.csv", columns, rows)
        writer.manifest({"command": "train-occupancy"})
    """

    def __init__(self, directory, **kwargs):
        """
        Args:
            directory (str): Output directory, created when missing
            config (ExperimentConfig, optional): Echoed into manifests and binary headers
            force (bool, optional): Allow writing into a non-empty directory. Defaults to False.
            resume (bool, optional): Reuse a directory written by an earlier stage without
                requiring `force`. Defaults to False.
        """
        self.directory = directory
        self.config = kwargs.get("config")
        self.force = kwargs.get("force", False)
        self.artifacts = []
        if path.isdir(directory) and os.listdir(directory):
            if not (self.force or kwargs.get("resume", False)):
                raise ConfigurationError(
                    f"Output directory {directory} is not empty; pass --force to overwrite"
                )
        os.makedirs(directory, exist_ok=True)

    def __repr__(self):
        return f"occlab RunWriter - {self.directory}, {len(self.artifacts)} artifacts"

    @property
    def config_dict(self):
        return self.config.as_dict() if self.config is not None else {}

    @property
    def input_hashes(self):
        return self.config.input_hashes() if self.config is not None else {}

    def path(self, name):
        full = path.join(self.directory, name)
        os.makedirs(path.dirname(full), exist_ok=True)
        return full

    def _record(self, name):
        if name not in self.artifacts:
            self.artifacts.append(name)
        logger.debug("wrote %s", path.join(self.directory, name))
        return path.join(self.directory, name)

    ###########################################################
    # Artifacts
    ###########################################################

    def png(self, name, rgb):
        write_png(self.path(name), rgb)
        return self._record(name)

    def ppm(self, name, rgb):
        write_ppm(self.path(name), rgb)
        return self._record(name)

    def depth(self, name, depth):
        write_depth(self.path(name), depth)
        return self._record(name)

    def ply(self, name, positions, colors, alpha=None, comment=None):
        write_ply(self.path(name), positions, colors, alpha, comment)
        return self._record(name)

    def csv(self, name, columns, rows):
        write_csv(self.path(name), columns, rows)
        return self._record(name)

    def json(self, name, data):
        write_json(self.path(name), data)
        return self._record(name)

    def checkpoint(self, name, store, kind, extra=None, moments=True):
        extra = dict(extra or {})
        extra.setdefault("inputs", self.input_hashes)
        write_checkpoint(
            self.path(name), store, kind, config=self.config_dict, extra=extra, moments=moments
        )
        return self._record(name)

    def grid(self, name, grid, extra=None):
        write_grid_snapshot(self.path(name), grid, config=self.config_dict, extra=extra)
        return self._record(name)

    def manifest(self, data=None, name="manifest.json"):
        """Writes the run manifest: resolved config, input hashes, artifacts and `data`."""
        content = {
            "occlab_version": __version__,
            "config": self.config_dict,
            "inputs": self.input_hashes,
            "artifacts": sorted(a for a in self.artifacts if a != name),
        }
        content.update(data or {})
        return self.json(name, content)
