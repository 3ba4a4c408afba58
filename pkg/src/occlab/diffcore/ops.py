"""
Differentiable primitives over DiffValue matrices.

Every function here builds one graph node whose backward function adds exact gradients into its
parents. Inputs are 2D float64 arrays (rows are batch entries, columns are channels). There is
no general broadcasting: binary operations take two equal shapes, or a DiffValue and a Python
scalar. Row scaling by a column vector has its own primitive, `scale_rows`.
"""

import numpy as np

from ..errors import ConfigurationError
from .value import DiffValue, as_value


__all__ = [
    "constant",
    "detach",
    "add",
    "mul",
    "divide",
    "scale_rows",
    "linear",
    "layer_norm",
    "softmax",
    "relu",
    "sigmoid",
    "softplus",
    "exp",
    "sum",
    "mean",
    "columns",
    "take_rows",
    "concat_rows",
    "concat_cols",
]


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ConfigurationError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _stable_sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


###########################################################
# Leaves
###########################################################


def constant(x):
    """Wraps an array as a leaf that never receives gradients."""
    return DiffValue(x, requires_grad=False, op="constant")


def detach(x):
    """Forwards the values of `x` and blocks every gradient that would flow back into it."""
    x = as_value(x)
    return DiffValue(x.data.copy(), requires_grad=False, op="detach")


###########################################################
# Elementwise arithmetic
###########################################################


def add(a, b):
    a = as_value(a)
    if np.isscalar(b):
        def backward(g):
            a.accumulate(g)

        return DiffValue(a.data + b, (a,), backward, op="add")
    b = as_value(b)
    _check_same_shape(a, b, "add")

    def backward(g):
        a.accumulate(g)
        b.accumulate(g)

    return DiffValue(a.data + b.data, (a, b), backward, op="add")


def mul(a, b):
    """Elementwise product of two equal-shape values, or of a value and a scalar."""
    a = as_value(a)
    if np.isscalar(b):
        def backward(g):
            a.accumulate(g * b)

        return DiffValue(a.data * b, (a,), backward, op="mul")
    b = as_value(b)
    _check_same_shape(a, b, "mul")

    def backward(g):
        a.accumulate(g * b.data)
        b.accumulate(g * a.data)

    return DiffValue(a.data * b.data, (a, b), backward, op="mul")


def divide(a, b):
    a = as_value(a)
    if np.isscalar(b):
        return mul(a, 1.0 / b)
    b = as_value(b)
    _check_same_shape(a, b, "divide")
    out = a.data / b.data

    def backward(g):
        a.accumulate(g / b.data)
        b.accumulate(-g * out / b.data)

    return DiffValue(out, (a, b), backward, op="divide")


def scale_rows(x, s):
    """
    Multiplies each row of `x` (B, C) by the matching entry of the column `s` (B, 1).

    This is how gate values are applied to sub-network features, so the gradient with respect to
    `s` is the row-wise dot product of the upstream gradient and `x`.
    """
    x = as_value(x)
    s = as_value(s)
    if s.shape != (x.shape[0], 1):
        raise ConfigurationError(
            f"scale_rows: scale shape {s.shape} does not match rows of {x.shape}"
        )

    def backward(g):
        x.accumulate(g * s.data)
        s.accumulate(np.sum(g * x.data, axis=1, keepdims=True))

    return DiffValue(x.data * s.data, (x, s), backward, op="scale_rows")


###########################################################
# Layers
###########################################################


def linear(x, weight, bias):
    """
    Dense layer: x @ W + b.

    Args:
        x (DiffValue): Input of shape (B, in)
        weight (DiffValue): Parameter of shape (in, out)
        bias (DiffValue): Parameter of shape (1, out)

    Returns:
        DiffValue: Output of shape (B, out)
    """
    x = as_value(x)
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ConfigurationError(
            f"linear: input {x.shape} does not match weight {weight.shape}"
        )
    if bias.shape != (1, weight.shape[1]):
        raise ConfigurationError(
            f"linear: bias {bias.shape} does not match weight {weight.shape}"
        )

    def backward(g):
        x.accumulate(g @ weight.data.T)
        weight.accumulate(x.data.T @ g)
        bias.accumulate(np.sum(g, axis=0, keepdims=True))

    return DiffValue(x.data @ weight.data + bias.data, (x, weight, bias), backward, op="linear")


def layer_norm(x, gain, shift, eps=1e-5):
    """
    Normalizes each row to zero mean and unit variance, then applies the per-channel gain and
    shift. `eps` is added to the variance so constant rows map to `shift`.
    """
    x = as_value(x)
    channels = x.shape[1]
    if channels < 2:
        raise ConfigurationError("layer_norm needs at least two channels")
    if gain.shape != (1, channels) or shift.shape != (1, channels):
        raise ConfigurationError(
            f"layer_norm: gain {gain.shape} / shift {shift.shape} do not match {x.shape}"
        )
    mu = x.data.mean(axis=1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=1, keepdims=True) + eps)
    xhat = centered * inv_std

    def backward(g):
        gain.accumulate(np.sum(g * xhat, axis=0, keepdims=True))
        shift.accumulate(np.sum(g, axis=0, keepdims=True))
        dxhat = g * gain.data
        x.accumulate(
            inv_std
            * (
                dxhat
                - dxhat.mean(axis=1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
            )
        )

    return DiffValue(xhat * gain.data + shift.data, (x, gain, shift), backward, op="layer_norm")


def softmax(x):
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    x = as_value(x)
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        x.accumulate(y * (g - np.sum(g * y, axis=1, keepdims=True)))

    return DiffValue(y, (x,), backward, op="softmax")


###########################################################
# Activations
###########################################################


def relu(x):
    x = as_value(x)
    mask = x.data > 0

    def backward(g):
        x.accumulate(g * mask)

    return DiffValue(x.data * mask, (x,), backward, op="relu")


def sigmoid(x):
    x = as_value(x)
    y = _stable_sigmoid(x.data)

    def backward(g):
        x.accumulate(g * y * (1.0 - y))

    return DiffValue(y, (x,), backward, op="sigmoid")


def softplus(x):
    """log(1 + e^x), which keeps densities nonnegative."""
    x = as_value(x)
    y = np.logaddexp(0.0, x.data)

    def backward(g):
        x.accumulate(g * _stable_sigmoid(x.data))

    return DiffValue(y, (x,), backward, op="softplus")


def exp(x):
    x = as_value(x)
    y = np.exp(x.data)

    def backward(g):
        x.accumulate(g * y)

    return DiffValue(y, (x,), backward, op="exp")


###########################################################
# Reductions
###########################################################


def sum(x, axis=None):
    """
    Sums all entries (result (1, 1)), columns (axis=0, result (1, C)) or rows (axis=1,
    result (B, 1)).
    """
    x = as_value(x)
    if axis is None:
        out = np.array([[x.data.sum()]])
    else:
        out = x.data.sum(axis=axis, keepdims=True)

    def backward(g):
        x.accumulate(np.broadcast_to(g, x.shape))

    return DiffValue(out, (x,), backward, op="sum")


def mean(x, axis=None):
    x = as_value(x)
    count = x.data.size if axis is None else x.shape[axis]
    return mul(sum(x, axis=axis), 1.0 / count)


###########################################################
# Slicing and assembly
###########################################################


def columns(x, start, stop):
    """Selects the column range [start, stop)."""
    x = as_value(x)

    def backward(g):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        x.accumulate(full)

    return DiffValue(x.data[:, start:stop], (x,), backward, op="columns")


def take_rows(x, index):
    """Gathers rows by integer index. Repeated indices accumulate in backward."""
    x = as_value(x)
    index = np.asarray(index, dtype=np.int64)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        x.accumulate(full)

    return DiffValue(x.data[index], (x,), backward, op="take_rows")


def concat_rows(parts):
    parts = [as_value(p) for p in parts]
    bounds = np.cumsum([0] + [p.shape[0] for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            p.accumulate(g[lo:hi])

    return DiffValue(
        np.concatenate([p.data for p in parts], axis=0), parts, backward, op="concat_rows"
    )


def concat_cols(parts):
    parts = [as_value(p) for p in parts]
    bounds = np.cumsum([0] + [p.shape[1] for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            p.accumulate(g[:, lo:hi])

    return DiffValue(
        np.concatenate([p.data for p in parts], axis=1), parts, backward, op="concat_cols"
    )
