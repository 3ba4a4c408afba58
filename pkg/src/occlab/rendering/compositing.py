"""
Alpha compositing of ragged per-ray sample lists.

For the samples of one ray, with tau_i = sigma_i * delta_i:

    alpha_i = 1 - exp(-tau_i)
    T_i     = exp(-sum_{j<i} tau_j)
    w_i     = T_i * alpha_i
    C       = sum_i w_i c_i + T_end * background,   T_end = exp(-sum_i tau_i)

Rays with no samples keep T_end = 1 and composite to the background.
"""

import numpy as np

from ..diffcore import DiffValue, as_value
from ..errors import ConfigurationError


__all__ = ["CompositeResult", "composite_arrays", "composite"]


class CompositeResult:
    """
    Per-ray and per-sample outputs of compositing, as numpy arrays.

    Attributes:
        color (np.ndarray): (R, 3) composited colors, background included
        weights (np.ndarray): (S,) T_i * alpha_i
        transmittance (np.ndarray): (S,) T_i
        alpha (np.ndarray): (S,) 1 - exp(-sigma_i delta_i)
        opacity (np.ndarray): (R,) sum of weights, 1 - T_end
        final_transmittance (np.ndarray): (R,) T_end
        depth (np.ndarray or None): (R,) sum of w_i t_i when sample depths were given
    """

    def __init__(self, **kwargs):
        self.color = kwargs.get("color")
        self.weights = kwargs.get("weights")
        self.transmittance = kwargs.get("transmittance")
        self.alpha = kwargs.get("alpha")
        self.opacity = kwargs.get("opacity")
        self.final_transmittance = kwargs.get("final_transmittance")
        self.depth = kwargs.get("depth")

    def __repr__(self):
        return f"occlab CompositeResult - {self.color.shape[0]} rays"


def _pad(values, ray_offsets):
    """Scatters flattened per-sample values into a zero-padded (R, max count) matrix."""
    counts = np.diff(ray_offsets)
    rays = counts.size
    width = int(counts.max()) if rays else 0
    ray_index = np.repeat(np.arange(rays), counts)
    column = np.arange(values.shape[0]) - ray_offsets[ray_index]
    padded = np.zeros((rays, width) + values.shape[1:])
    padded[ray_index, column] = values
    return padded, ray_index, column


def _transmittance(tau, ray_offsets):
    """Returns T_i, T_{i+1} per sample and T_end per ray, accumulated ray by ray."""
    padded, ray_index, column = _pad(tau, ray_offsets)
    inclusive = np.cumsum(padded, axis=1)
    after = np.exp(-inclusive[ray_index, column])
    before = np.exp(-(inclusive[ray_index, column] - tau))
    if padded.shape[1]:
        final = np.exp(-inclusive[:, -1])
    else:
        final = np.ones(padded.shape[0])
    return before, after, final


def _check_inputs(sigma, color, deltas, ray_offsets):
    if sigma.shape != deltas.shape:
        raise ConfigurationError(f"sigma {sigma.shape} and deltas {deltas.shape} differ")
    if color.shape != (sigma.shape[0], 3):
        raise ConfigurationError(f"color must be ({sigma.shape[0]}, 3), got {color.shape}")
    if ray_offsets[-1] != sigma.shape[0]:
        raise ConfigurationError("ray_offsets do not cover the samples")
    if np.any(sigma < 0):
        raise ConfigurationError("compositing needs nonnegative densities")


def composite_arrays(sigma, color, deltas, ray_offsets, background=(0.0, 0.0, 0.0), t=None):
    """
    Composites flattened samples without building a graph.

    Args:
        sigma (np.ndarray): (S,) densities
        color (np.ndarray): (S, 3) colors
        deltas (np.ndarray): (S,) segment lengths
        ray_offsets (np.ndarray): (R + 1,) sample ranges per ray
        background (tuple, optional): Color behind the last sample. Defaults to black.
        t (np.ndarray, optional): (S,) sample depths, enables the depth output

    Returns:
        CompositeResult: Colors, weights, transmittance, alpha, opacity and depth
    """
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    color = np.asarray(color, dtype=np.float64).reshape(-1, 3)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1)
    ray_offsets = np.asarray(ray_offsets, dtype=np.int64)
    _check_inputs(sigma, color, deltas, ray_offsets)
    rays = ray_offsets.size - 1
    ray_index = np.repeat(np.arange(rays), np.diff(ray_offsets))

    tau = sigma * deltas
    before, after, final = _transmittance(tau, ray_offsets)
    alpha = -np.expm1(-tau)
    weights = before - after

    out = np.zeros((rays, 3))
    np.add.at(out, ray_index, weights[:, None] * color)
    out += final[:, None] * np.asarray(background, dtype=np.float64)[None, :]
    depth = None
    if t is not None:
        depth = np.bincount(ray_index, weights=weights * np.asarray(t), minlength=rays)
    return CompositeResult(
        color=out,
        weights=weights,
        transmittance=before,
        alpha=alpha,
        opacity=1.0 - final,
        final_transmittance=final,
        depth=depth,
    )


def composite(sigma, rgb, samples, background=(0.0, 0.0, 0.0)):
    """
    Differentiable compositing of field outputs along the rays of a SampleBatch.

    Args:
        sigma (DiffValue): (S, 1) densities
        rgb (DiffValue): (S, 3) colors
        samples (SampleBatch): Depths, deltas and ray offsets of the same samples
        background (tuple, optional): Background color. Defaults to black.

    Returns:
        tuple: (DiffValue (R, 3) colors, CompositeResult with the numpy by-products)
    """
    sigma = as_value(sigma)
    rgb = as_value(rgb)
    background = np.asarray(background, dtype=np.float64)
    result = composite_arrays(
        sigma.data, rgb.data, samples.deltas, samples.ray_offsets, background, samples.t
    )
    ray_index = samples.ray_index
    deltas = samples.deltas
    offsets = samples.ray_offsets
    after = result.transmittance - result.weights

    def backward(g):
        g_sample = g[ray_index]
        rgb.accumulate(result.weights[:, None] * g_sample)
        q = result.weights * np.sum(g_sample * rgb.data, axis=1)
        padded, _, column = _pad(q, offsets)
        # sum of q over the samples strictly behind each sample
        behind = padded.sum(axis=1)[ray_index] - np.cumsum(padded, axis=1)[ray_index, column]
        to_background = result.final_transmittance * (g @ background)
        d_tau = after * np.sum(g_sample * rgb.data, axis=1) - behind - to_background[ray_index]
        sigma.accumulate((d_tau * deltas)[:, None])

    return DiffValue(result.color, (sigma, rgb), backward, op="composite"), result
