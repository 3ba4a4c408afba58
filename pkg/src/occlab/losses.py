"""
Training objectives: the rendering loss, the balanced and imbalanced routing losses over the
occupancy gates, the density loss and their weighted sum.

The routing losses follow the usual top-1 load-balancing form sum_i f_i p_i, where f_i is the
fraction of points dispatched to route i (piecewise constant, no gradient) and p_i the mean gate
value of route i over the whole batch (differentiable).
"""

import logging

import numpy as np

from .diffcore import DiffValue, as_value, ops
from .errors import ConfigurationError, require

logger = logging.getLogger(__name__)

__all__ = [
    "LossWeights",
    "RoutingStats",
    "rendering_loss",
    "balanced_loss",
    "imbalanced_occupancy_loss",
    "density_loss",
    "density_loss_terms",
    "final_loss",
]


class LossWeights:
    """w_r, w_o and w_d of the final loss. Defaults are the desk preset's."""

    def __init__(self, **kwargs):
        self.w_r = float(kwargs.get("w_r", 1.0))
        self.w_o = float(kwargs.get("w_o", 0.01))
        self.w_d = float(kwargs.get("w_d", 0.1))
        for name in ("w_r", "w_o", "w_d"):
            value = getattr(self, name)
            require(np.isfinite(value) and value >= 0, f"loss.{name} must be finite and >= 0")

    def __repr__(self):
        return f"occlab LossWeights - w_r={self.w_r}, w_o={self.w_o}, w_d={self.w_d}"


class RoutingStats:
    """
    Dispatch fractions and mean gate values of one batch.

    Attributes:
        f (np.ndarray): (n+1,) fraction of points whose top-1 route is i
        p (DiffValue): (1, n+1) mean gate value of route i over the batch
        counts (np.ndarray): (n+1,) points per route
        n (int): Scene sub-networks
        v (int): Virtual copies of the empty-space network in the imbalanced loss
    """

    def __init__(self, gates, v=8):
        if len(gates) == 0:
            raise ConfigurationError("RoutingStats needs a nonempty batch")
        self.n = gates.n_scene
        self.v = v
        self.counts = np.bincount(gates.top1_index, minlength=self.n + 1)
        self.f = self.counts / float(len(gates))
        self.p = ops.mean(gates.values, axis=0)

    def __repr__(self):
        return f"occlab RoutingStats - f={np.round(self.f, 4).tolist()}"

    @classmethod
    def from_fractions(cls, f, p, n, v):
        """Builds stats from explicit fractions and gate means, for analysis and tests."""
        stats = cls.__new__(cls)
        stats.n = n
        stats.v = v
        stats.f = np.asarray(f, dtype=np.float64).reshape(-1)
        stats.counts = None
        if not isinstance(p, DiffValue):
            p = ops.constant(np.asarray(p, dtype=np.float64).reshape(1, -1))
        stats.p = p
        if stats.f.size != n + 1 or stats.p.shape != (1, n + 1):
            raise ConfigurationError(f"fractions must have n+1 = {n + 1} entries")
        return stats

    @property
    def empty_fraction(self):
        return float(self.f[self.n])


def rendering_loss(predicted, target):
    """
    Squared color error, summed over the three channels and averaged over rays.

    Args:
        predicted (DiffValue): (R, 3) composited colors
        target (np.ndarray): (R, 3) ground truth

    Returns:
        DiffValue: (1, 1) loss
    """
    predicted = as_value(predicted)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ConfigurationError(
            f"rendering_loss: prediction {predicted.shape} vs target {target.shape}"
        )
    if predicted.shape[0] == 0:
        raise ConfigurationError("rendering_loss needs at least one ray")
    residual = ops.add(predicted, -target)
    return ops.mul(ops.sum(ops.mul(residual, residual)), 1.0 / predicted.shape[0])


def balanced_loss(stats):
    """L_b = (n+1) sum_i f_i p_i over the n+1 routes; 1.0 at perfect balance."""
    weights = ops.constant(stats.f[None, :])
    return ops.mul(ops.sum(ops.mul(stats.p, weights)), float(stats.n + 1))


def imbalanced_occupancy_loss(stats):
    """
    L_o = (n+v) (f_e p_e / v + sum_{i<n} f_i p_i).

    The empty-space route counts as v virtual routes, which moves the optimum to
    f_e = v/(n+v), f_i = 1/(n+v), where L_o = 1.
    """
    require(stats.v >= 1 and stats.n >= 1, "imbalanced loss needs n >= 1 and v >= 1")
    weights = stats.f.copy()
    weights[stats.n] /= stats.v
    return ops.mul(
        ops.sum(ops.mul(stats.p, ops.constant(weights[None, :]))), float(stats.n + stats.v)
    )


def density_loss_terms(empty_gate, empty_sigma, scene_gate, scene_sigma):
    """
    sigma_e / sigma_s from the two point sets.

    Args:
        empty_gate (DiffValue): (|X|, 1) empty-space gate values o_n of empty-routed points
        empty_sigma (array_like): (|X|,) their densities, treated as constants
        scene_gate (DiffValue): (|Y|, 1) summed scene gate values of scene-routed points
        scene_sigma (array_like): (|Y|,) their densities, treated as constants

    Returns:
        tuple: (DiffValue loss or None, sigma_e, sigma_s) where None means the term is skipped
    """
    empty_gate = as_value(empty_gate)
    scene_gate = as_value(scene_gate)
    empty_sigma = np.asarray(empty_sigma, dtype=np.float64).reshape(-1, 1)
    scene_sigma = np.asarray(scene_sigma, dtype=np.float64).reshape(-1, 1)
    if empty_gate.shape[0] == 0 or scene_gate.shape[0] == 0:
        logger.warning(
            "density loss skipped: %d empty-routed and %d scene-routed points",
            empty_gate.shape[0],
            scene_gate.shape[0],
        )
        return None, None, None
    sigma_e = ops.mean(ops.mul(empty_gate, ops.constant(empty_sigma)))
    sigma_s = ops.mean(ops.mul(scene_gate, ops.constant(scene_sigma)))
    if sigma_s.item() <= 0:
        logger.warning("density loss skipped: scene-routed mean density is zero")
        return None, sigma_e.item(), 0.0
    return ops.divide(sigma_e, sigma_s), sigma_e.item(), sigma_s.item()


def density_loss(gates, sigma):
    """
    L_d = sigma_e / sigma_s for one batch.

    `sigma` is detached first, so the gradient reaches only the occupancy network through the
    gate factors. Scene-routed points use the sum of their n scene gate values.

    Args:
        gates (GateVector): Gates of the batch
        sigma (DiffValue or np.ndarray): (B, 1) or (B,) predicted densities

    Returns:
        tuple: (DiffValue loss or None, sigma_e, sigma_s)
    """
    if isinstance(sigma, DiffValue):
        sigma = ops.detach(sigma).data
    sigma_data = np.asarray(sigma, dtype=np.float64)
    sigma_data = sigma_data.reshape(-1)
    empty = np.flatnonzero(gates.routed_to_empty)
    scene = np.flatnonzero(~gates.routed_to_empty)
    return density_loss_terms(
        ops.take_rows(gates.gate(gates.n_scene), empty),
        sigma_data[empty],
        ops.take_rows(gates.scene_mass(), scene),
        sigma_data[scene],
    )


def final_loss(l_r, l_o, l_d, weights):
    """
    L_f = w_r L_r + w_o L_o + w_d L_d. Terms that are None or weighted by zero are left out.

    Returns:
        DiffValue: (1, 1) loss
    """
    total = None
    for term, weight in ((l_r, weights.w_r), (l_o, weights.w_o), (l_d, weights.w_d)):
        if term is None or weight == 0:
            continue
        if not isinstance(term, DiffValue):
            term = ops.constant(np.reshape(np.asarray(term, dtype=np.float64), (1, 1)))
        part = ops.mul(term, weight)
        total = part if total is None else ops.add(total, part)
    if total is None:
        return ops.constant(np.zeros((1, 1)))
    return total
