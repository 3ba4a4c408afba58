import numpy as np


__all__ = ["positional_encode", "encoded_size", "normalize_directions"]


def encoded_size(bands):
    return 3 + 6 * bands


def positional_encode(x, bands):
    """
    Frequency encoding of 3D coordinates.

    Args:
        x (np.ndarray): Points of shape (B, 3) or a single 3-vector, in [-1, 1]^3
        bands (int): Number of frequency bands F

    Returns:
        np.ndarray: (B, 3 + 6F) features laid out as [x, sin(2^0 pi x), cos(2^0 pi x), ...]
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    features = [x]
    for j in range(bands):
        scaled = (2.0**j) * np.pi * x
        features.append(np.sin(scaled))
        features.append(np.cos(scaled))
    return np.concatenate(features, axis=1)


def normalize_directions(d):
    d = np.atleast_2d(np.asarray(d, dtype=np.float64))
    return d / np.linalg.norm(d, axis=1, keepdims=True)
