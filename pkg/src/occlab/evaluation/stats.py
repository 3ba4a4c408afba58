import logging

import numpy as np


logger = logging.getLogger(__name__)

__all__ = ["OccStats", "OccStatsLog", "collect_occ_stats", "sample_alpha"]


def sample_alpha(sigma, deltas):
    """Per-sample opacity 1 - exp(-sigma * delta)."""
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1)
    return -np.expm1(-sigma * deltas)


def _mean(values):
    return float(values.mean()) if values.size else None


def _ratio(numerator, denominator):
    if numerator is None or denominator is None or denominator == 0:
        return None
    return numerator / denominator


class OccStats:
    """
    Routing statistics of one evaluation step: how points split between the scene network S
    and the empty-space network E_e, and the mean density and opacity each branch produces.
    Means of a branch that received no points are None, and so are the ratios using them.
    """

    COLUMNS = [
        "step",
        "fraction_scene",
        "fraction_empty",
        "sigma_scene",
        "sigma_empty",
        "alpha_scene",
        "alpha_empty",
        "sigma_ratio",
        "alpha_ratio",
    ]

    def __init__(self, step, **kwargs):
        self.step = int(step)
        for column in self.COLUMNS[1:]:
            setattr(self, column, kwargs.get(column))

    def __repr__(self):
        return (
            f"occlab OccStats - step {self.step}, "
            f"{self.fraction_empty:.3f} routed to empty space"
        )

    def as_row(self):
        return {column: getattr(self, column) for column in self.COLUMNS}


def collect_occ_stats(step, sigma, deltas, routed_to_empty):
    """
    Args:
        step (int): Training step the batch belongs to
        sigma (array_like): (S,) densities of the sampled points
        deltas (array_like): (S,) sample spacings, for the opacities
        routed_to_empty (array_like): (S,) True where the top-1 route is E_e

    Returns:
        OccStats: Fractions, per-branch means and the S/E_e ratios
    """
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    empty = np.asarray(routed_to_empty, dtype=bool).reshape(-1)
    alpha = sample_alpha(sigma, deltas)
    total = sigma.size
    fraction_empty = float(empty.sum()) / total if total else 0.0
    stats = OccStats(
        step,
        fraction_scene=1.0 - fraction_empty if total else 0.0,
        fraction_empty=fraction_empty,
        sigma_scene=_mean(sigma[~empty]),
        sigma_empty=_mean(sigma[empty]),
        alpha_scene=_mean(alpha[~empty]),
        alpha_empty=_mean(alpha[empty]),
    )
    stats.sigma_ratio = _ratio(stats.sigma_scene, stats.sigma_empty)
    stats.alpha_ratio = _ratio(stats.alpha_scene, stats.alpha_empty)
    if stats.sigma_ratio is None:
        logger.warning("step %d: scene/empty density ratio is undefined", step)
    return stats


class OccStatsLog:
    """A growing series of OccStats, written as occ_stats.csv."""

    def __init__(self):
        self.rows = []

    def __repr__(self):
        return f"occlab OccStatsLog - {len(self.rows)} rows"

    def __len__(self):
        return len(self.rows)

    def append(self, stats):
        self.rows.append(stats)
        return stats

    @property
    def last(self):
        return self.rows[-1] if self.rows else None

    def write(self, writer, name="occ_stats.csv"):
        return writer.csv(name, OccStats.COLUMNS, [s.as_row() for s in self.rows])
