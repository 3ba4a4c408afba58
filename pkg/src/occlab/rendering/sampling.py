import numpy as np

from ..errors import ConfigurationError


__all__ = [
    "SampleBatch",
    "stratified_sample",
    "guided_sample",
    "split_sample",
    "StratifiedSampler",
    "GuidedSampler",
]


class SampleBatch:
    """
    Flattened samples of a batch of rays. Samples of ray r occupy
    [ray_offsets[r], ray_offsets[r + 1]) and are sorted by depth. Each sample carries the bin
    [bin_lower, bin_upper] it was drawn from and its segment length `deltas`.
    """

    def __init__(self, rays, t, deltas, ray_offsets, bin_lower, bin_upper, **kwargs):
        self.rays = rays
        self.t = np.asarray(t, dtype=np.float64)
        self.deltas = np.asarray(deltas, dtype=np.float64)
        self.ray_offsets = np.asarray(ray_offsets, dtype=np.int64)
        self.bin_lower = np.asarray(bin_lower, dtype=np.float64)
        self.bin_upper = np.asarray(bin_upper, dtype=np.float64)
        self.ray_index = np.repeat(np.arange(len(rays)), self.counts)
        self.positions = rays.origins[self.ray_index] + self.t[:, None] * rays.directions[
            self.ray_index
        ]
        self.directions = rays.directions[self.ray_index]
        # occupancy-network (or grid) queries spent producing this batch
        self.coarse_evaluations = kwargs.get("coarse_evaluations", 0)
        self.occupied_coarse = kwargs.get("occupied_coarse", None)

    def __repr__(self):
        return f"occlab SampleBatch - {len(self)} samples over {self.num_rays} rays"

    def __len__(self):
        return self.t.size

    @property
    def num_rays(self):
        return self.ray_offsets.size - 1

    @property
    def counts(self):
        return np.diff(self.ray_offsets)

    def select(self, mask):
        """Keeps the samples where `mask` is True, preserving order and ray membership."""
        mask = np.asarray(mask, dtype=bool)
        counts = np.bincount(self.ray_index[mask], minlength=self.num_rays)
        return SampleBatch(
            self.rays,
            self.t[mask],
            self.deltas[mask],
            np.concatenate([[0], np.cumsum(counts)]),
            self.bin_lower[mask],
            self.bin_upper[mask],
        )


def stratified_sample(rays, n_samples, rng=None, jitter=True):
    """
    Splits every valid ray's [near, far] into `n_samples` equal bins and draws one depth per
    bin. Without jitter (or without `rng`) the depth is the bin midpoint.

    delta_i = t_{i+1} - t_i, and the last sample's delta reaches to `far`.

    Args:
        rays (RayBundle): Rays with near/far set
        n_samples (int): Samples per ray, at least 2
        rng (np.random.Generator, optional): Source of the jitter
        jitter (bool, optional): Draw uniformly inside each bin. Defaults to True.

    Returns:
        SampleBatch: n_samples samples for each valid ray, none for rays that miss the bounds
    """
    if n_samples < 2:
        raise ConfigurationError("stratified_sample needs at least 2 samples per ray")
    valid = rays.valid
    counts = np.where(valid, n_samples, 0)
    near = rays.near[valid][:, None]
    far = rays.far[valid][:, None]
    fractions = np.arange(n_samples + 1, dtype=np.float64) / n_samples
    edges = near + (far - near) * fractions[None, :]
    lower = edges[:, :-1]
    upper = edges[:, 1:]
    if jitter and rng is not None:
        u = rng.random(lower.shape)
    else:
        u = np.full(lower.shape, 0.5)
    t = lower + u * (upper - lower)
    deltas = np.empty_like(t)
    deltas[:, :-1] = t[:, 1:] - t[:, :-1]
    deltas[:, -1] = far[:, 0] - t[:, -1]
    return SampleBatch(
        rays,
        t.reshape(-1),
        deltas.reshape(-1),
        np.concatenate([[0], np.cumsum(counts)]),
        lower.reshape(-1),
        upper.reshape(-1),
    )


def guided_sample(rays, predicate, coarse_samples=128, split_factor=8, rng=None, jitter=True):
    """
    Two-stage sampling around an occupancy predicate.

    Coarse stratified samples are tested with `predicate`; unoccupied ones are dropped and each
    occupied coarse bin is cut into `split_factor` equal sub-bins with one sample at each
    sub-bin midpoint (delta = sub-bin width). The main field never sees a point the predicate
    rejected, and the predicate only sees the coarse points.

    Args:
        rays (RayBundle): Rays with near/far set
        predicate (callable): (M, 3) positions -> (M,) booleans, True meaning occupied
        coarse_samples (int, optional): Coarse samples per ray. Defaults to 128.
        split_factor (int, optional): Fine samples per occupied coarse bin. Defaults to 8.
        rng (np.random.Generator, optional): Jitter of the coarse stage
        jitter (bool, optional): Jitter the coarse stage. Defaults to True.

    Returns:
        SampleBatch: The fine samples; rays without occupied coarse samples get none
    """
    if split_factor < 1:
        raise ConfigurationError("split_factor must be at least 1")
    coarse = stratified_sample(rays, coarse_samples, rng, jitter)
    if len(coarse):
        occupied = np.asarray(predicate(coarse.positions), dtype=bool)
    else:
        occupied = np.zeros(0, dtype=bool)
    lower = coarse.bin_lower[occupied]
    width = (coarse.bin_upper - coarse.bin_lower)[occupied] / split_factor
    steps = np.arange(split_factor, dtype=np.float64)
    fine_lower = (lower[:, None] + width[:, None] * steps[None, :]).reshape(-1)
    fine_width = np.repeat(width, split_factor)
    fine_ray = np.repeat(coarse.ray_index[occupied], split_factor)
    counts = np.bincount(fine_ray, minlength=len(rays))
    return SampleBatch(
        rays,
        fine_lower + 0.5 * fine_width,
        fine_width,
        np.concatenate([[0], np.cumsum(counts)]),
        fine_lower,
        fine_lower + fine_width,
        coarse_evaluations=len(coarse),
        occupied_coarse=int(occupied.sum()),
    )


def split_sample(rays, coarse_samples=128, split_factor=8, rng=None, jitter=True):
    """guided_sample with a predicate that accepts every point."""
    return guided_sample(
        rays,
        lambda positions: np.ones(len(positions), dtype=bool),
        coarse_samples,
        split_factor,
        rng,
        jitter,
    )


###########################################################
# Sampler objects
###########################################################


class StratifiedSampler:
    """Dense sampling: `n_samples` stratified samples on every ray."""

    def __init__(self, n_samples, jitter=True):
        self.n_samples = n_samples
        self.jitter = jitter

    def __repr__(self):
        return f"occlab StratifiedSampler - {self.n_samples} samples/ray"

    def __call__(self, rays, rng=None):
        return stratified_sample(rays, self.n_samples, rng, self.jitter)


class GuidedSampler:
    """Coarse-filter-split sampling around any occupancy predicate (network or grid)."""

    def __init__(self, predicate, coarse_samples=128, split_factor=8, jitter=True):
        self.predicate = predicate
        self.coarse_samples = coarse_samples
        self.split_factor = split_factor
        self.jitter = jitter

    def __repr__(self):
        return (
            f"occlab GuidedSampler - {self.coarse_samples} coarse x {self.split_factor} split"
        )

    def __call__(self, rays, rng=None):
        return guided_sample(
            rays, self.predicate, self.coarse_samples, self.split_factor, rng, self.jitter
        )
