"""
The momentum occupancy grid: a dense R^3 array of density estimates updated by
value <- max(decay * value, sigma) at one probe point per visited cell, and binarized by
value > threshold. Sampling through the grid reuses the guided sampler with the grid lookup as
its predicate.
"""

import logging

import numpy as np

from .errors import ConfigurationError, require
from .rendering.sampling import guided_sample

logger = logging.getLogger(__name__)

__all__ = ["OccGrid", "grid_guided_sample", "memory_report", "cell_centers"]


def cell_centers(resolution, bounds=(-1.0, 1.0)):
    """(R^3, 3) centers of the cells of a cube grid, in C order of (ix, iy, iz)."""
    lo, hi = bounds
    size = (hi - lo) / resolution
    axis = lo + (np.arange(resolution) + 0.5) * size
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([x.reshape(-1), y.reshape(-1), z.reshape(-1)], axis=1)


def memory_report(resolution):
    """
    Cell count and storage of a grid: float64 values plus a one-bit-per-cell occupancy field.

    Args:
        resolution (int): Cells per axis

    Returns:
        dict: resolution, cells, value_bytes, bitfield_bytes, total_bytes
    """
    require(int(resolution) >= 1, "grid resolution must be at least 1")
    cells = int(resolution) ** 3
    value_bytes = 8 * cells
    bitfield_bytes = -(-cells // 8)
    return {
        "resolution": int(resolution),
        "cells": cells,
        "value_bytes": value_bytes,
        "bitfield_bytes": bitfield_bytes,
        "total_bytes": value_bytes + bitfield_bytes,
    }


class OccGrid:
    """
    Dense occupancy grid over the cube [bounds[0], bounds[1]]^3.

    Every cell starts at `initial_value`, so with the default of 1.0 the grid starts fully
    occupied and empty cells are carved out as their values decay.
    """

    def __init__(self, resolution=32, **kwargs):
        """
        Args:
            resolution (int, optional): Cells per axis. Defaults to 32.
            bounds (tuple, optional): Cube extent. Defaults to (-1, 1).
            decay (float, optional): Momentum factor gamma. Defaults to 0.95.
            threshold (float, optional): Occupancy threshold tau. Defaults to 0.01.
            initial_value (float, optional): Starting density estimate. Defaults to 1.0.
        """
        self.resolution = int(resolution)
        self.bounds = tuple(float(b) for b in kwargs.get("bounds", (-1.0, 1.0)))
        self.decay = float(kwargs.get("decay", 0.95))
        self.threshold = float(kwargs.get("threshold", 0.01))
        initial_value = float(kwargs.get("initial_value", 1.0))

        require(self.resolution >= 1, "grid.resolution must be at least 1")
        require(self.bounds[1] > self.bounds[0], "grid bounds must be increasing")
        require(0.0 < self.decay <= 1.0, "grid.decay must lie in (0, 1]")
        require(self.threshold >= 0.0, "grid.threshold must be nonnegative")
        require(initial_value >= 0.0, "grid.initial_value must be nonnegative")

        shape = (self.resolution,) * 3
        self.values = np.full(shape, initial_value)
        self.binary = np.zeros(shape, dtype=bool)
        self.updates = 0
        self.binarize()

    def __repr__(self):
        return (
            f"occlab OccGrid - {self.resolution}^3, "
            f"{self.occupied_fraction:.3f} occupied after {self.updates} updates"
        )

    @property
    def cell_size(self):
        return (self.bounds[1] - self.bounds[0]) / self.resolution

    @property
    def cells(self):
        return self.values.size

    @property
    def occupied_fraction(self):
        return float(self.binary.mean())

    def binarize(self):
        self.binary = self.values > self.threshold
        return self.binary

    ###########################################################
    # Coordinates
    ###########################################################

    def world_to_grid(self, positions):
        """Integer cell indices of points; callers handle points outside the bounds."""
        positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        index = np.floor((positions - self.bounds[0]) / self.cell_size).astype(np.int64)
        # the upper face belongs to the last cell
        return np.clip(index, 0, self.resolution - 1)

    def grid_to_world(self, index):
        return self.bounds[0] + (np.asarray(index, dtype=np.float64) + 0.5) * self.cell_size

    def inside(self, positions):
        positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        return np.all((positions >= self.bounds[0]) & (positions <= self.bounds[1]), axis=1)

    def centers(self):
        return cell_centers(self.resolution, self.bounds)

    ###########################################################
    # Update and query
    ###########################################################

    def update(self, density_fn, rng=None, fraction=1.0, jitter=True, chunk=65536):
        """
        Evaluates the density once in each visited cell and applies the momentum rule.

        Args:
            density_fn (callable): (M, 3) positions -> (M,) densities
            rng (np.random.Generator, optional): Cell subset and probe jitter
            fraction (float, optional): Share of cells visited, drawn at random when < 1.
                Defaults to 1.0.
            jitter (bool, optional): Probe a uniform point in the cell instead of its center.
                Defaults to True.
            chunk (int, optional): Points per density evaluation

        Returns:
            np.ndarray: The updated binary occupancy
        """
        require(0.0 < fraction <= 1.0, "grid update fraction must lie in (0, 1]")
        cells = self.values.size
        if fraction < 1.0:
            if rng is None:
                raise ConfigurationError("a partial grid update needs an rng")
            count = max(1, int(round(fraction * cells)))
            flat = np.sort(rng.choice(cells, size=count, replace=False))
        else:
            flat = np.arange(cells)
        index = np.stack(np.unravel_index(flat, self.values.shape), axis=1)
        if jitter and rng is not None:
            offsets = rng.random(index.shape)
        else:
            offsets = np.full(index.shape, 0.5)
        positions = self.bounds[0] + (index + offsets) * self.cell_size

        sigma = np.empty(flat.size)
        for lo in range(0, flat.size, chunk):
            sigma[lo : lo + chunk] = np.asarray(density_fn(positions[lo : lo + chunk])).reshape(-1)
        bad = int(np.sum(~np.isfinite(sigma)))
        if bad:
            logger.warning("grid update saw %d non-finite densities", bad)
            sigma = np.nan_to_num(sigma, nan=0.0, posinf=np.finfo(np.float64).max)

        values = self.values.reshape(-1)
        values[flat] = np.maximum(self.decay * values[flat], sigma)
        self.updates += 1
        return self.binarize()

    def query(self, positions):
        """Binary occupancy at points; points outside the bounds are unoccupied."""
        positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        index = self.world_to_grid(positions)
        occupied = self.binary[index[:, 0], index[:, 1], index[:, 2]]
        return occupied & self.inside(positions)

    def memory_report(self):
        return memory_report(self.resolution)

    ###########################################################
    # Snapshot
    ###########################################################

    def header(self):
        return {
            "resolution": self.resolution,
            "bounds": list(self.bounds),
            "decay": self.decay,
            "threshold": self.threshold,
            "updates": self.updates,
        }

    @classmethod
    def from_snapshot(cls, header, values):
        grid = cls(
            header["resolution"],
            bounds=tuple(header["bounds"]),
            decay=header["decay"],
            threshold=header["threshold"],
        )
        values = np.asarray(values, dtype=np.float64)
        if values.size != grid.values.size:
            raise ConfigurationError(
                f"grid snapshot holds {values.size} values, expected {grid.values.size}"
            )
        grid.values = values.reshape(grid.values.shape).copy()
        grid.updates = int(header.get("updates", 0))
        grid.binarize()
        return grid


def grid_guided_sample(rays, grid, coarse_samples=128, split_factor=8, rng=None, jitter=True):
    """guided_sample with the grid lookup as the occupancy predicate."""
    return guided_sample(rays, grid.query, coarse_samples, split_factor, rng, jitter)
