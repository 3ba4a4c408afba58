import numpy as np

from . import ops


__all__ = ["gradcheck"]


def gradcheck(fn, inputs, h=1e-6, seed=0, floor=1e-3):
    """
    Compares the analytic gradients of `fn` with central finite differences.

    The output of `fn` is reduced to a scalar with a fixed random projection, so every output
    entry takes part in the check. Each input entry is perturbed in place by +-h and restored.

    Args:
        fn (callable): Builds a DiffValue from the DiffValues in `inputs`
        inputs (list of DiffValue): Leaves to differentiate with respect to
        h (float, optional): Finite-difference step
        seed (int, optional): Seed of the projection
        floor (float, optional): Lower bound of the relative-error denominator, which keeps
            entries whose true gradient is zero from dividing by noise

    Returns:
        float: The worst relative error over all input entries
    """
    out = fn(*inputs)
    projection = np.random.default_rng(seed).standard_normal(out.shape)

    def objective():
        return float(np.sum(fn(*inputs).data * projection))

    for x in inputs:
        x.zero_grad()
    ops.sum(ops.mul(out, projection)).backward()
    analytic = [x.grad.copy() for x in inputs]

    worst = 0.0
    for x, grad in zip(inputs, analytic):
        for index in np.ndindex(x.data.shape):
            original = x.data[index]
            x.data[index] = original + h
            plus = objective()
            x.data[index] = original - h
            minus = objective()
            x.data[index] = original
            numeric = (plus - minus) / (2.0 * h)
            scale = max(abs(grad[index]), abs(numeric), floor)
            worst = max(worst, abs(grad[index] - numeric) / scale)
    return worst
