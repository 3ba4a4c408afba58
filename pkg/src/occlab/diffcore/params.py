import logging

import numpy as np

from ..errors import ConfigurationError, NumericalError
from .value import DiffValue


__all__ = ["ParamStore", "Adam", "adam_step"]

logger = logging.getLogger(__name__)


class ParamStore:
    """
    Named parameter tensors plus the Adam state that belongs to them. Parameters are created in
    registration order from one seeded generator, so the same configuration and seed always
    produce the same values.
    """

    def __init__(self, seed=0, **kwargs):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.params = {}
        self.first_moment = {}
        self.second_moment = {}
        self.step = kwargs.get("step", 0)
        self.frozen = False

    def __repr__(self):
        return f"occlab ParamStore - {len(self.params)} tensors, {self.count()} values"

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params.items())

    def add(self, name, shape, init="uniform", fan_in=None):
        """
        Registers a parameter.

        Args:
            name (str): Unique name, usually "<component>.<layer>.<weight|bias>"
            shape (tuple): Tensor shape
            init (str, optional): "uniform" draws from U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
                "zeros" and "ones" are constant. Defaults to "uniform".
            fan_in (int, optional): Defaults to shape[0]

        Returns:
            DiffValue: The parameter leaf
        """
        if name in self.params:
            raise ConfigurationError(f"Parameter {name} registered twice")
        if init == "uniform":
            bound = 1.0 / np.sqrt(fan_in or shape[0])
            data = self.rng.uniform(-bound, bound, size=shape)
        elif init == "zeros":
            data = np.zeros(shape)
        elif init == "ones":
            data = np.ones(shape)
        else:
            raise ConfigurationError(f"Unknown initializer {init}")
        param = DiffValue(data, requires_grad=True, op=name)
        self.params[name] = param
        self.first_moment[name] = np.zeros(shape)
        self.second_moment[name] = np.zeros(shape)
        return param

    def count(self, prefix=None):
        """Number of scalar values, optionally restricted to names starting with `prefix`."""
        return int(
            np.sum(
                [
                    p.data.size
                    for name, p in self.params.items()
                    if prefix is None or name.startswith(prefix)
                ],
                dtype=np.int64,
            )
        )

    def zero_grad(self):
        for param in self.params.values():
            param.zero_grad()

    def freeze(self):
        """Marks the store read-only for optimizers."""
        self.frozen = True
        for param in self.params.values():
            param.requires_grad = False

    def grads(self):
        return {name: p.grad for name, p in self.params.items()}

    def values(self):
        return {name: p.data for name, p in self.params.items()}

    def load_state(self, values, first_moment=None, second_moment=None, step=0):
        """Copies values (and optionally Adam moments) into already registered parameters."""
        for name, param in self.params.items():
            if name not in values:
                raise ConfigurationError(f"Missing parameter {name} in state")
            if values[name].shape != param.shape:
                raise ConfigurationError(
                    f"Parameter {name} has shape {values[name].shape}, expected {param.shape}"
                )
            param.data = np.array(values[name], dtype=np.float64)
            param.zero_grad()
            if first_moment is not None:
                self.first_moment[name] = np.array(first_moment[name], dtype=np.float64)
            if second_moment is not None:
                self.second_moment[name] = np.array(second_moment[name], dtype=np.float64)
        self.step = step


def adam_step(store, grads=None, lr=5e-4, betas=(0.9, 0.999), eps=1e-8):
    """
    One bias-corrected Adam update of every parameter in `store`.

    All gradients are checked before anything is written, so a non-finite gradient leaves the
    store exactly as it was.

    Args:
        store (ParamStore): Parameters and moment buffers, updated in place
        grads (dict, optional): name -> gradient. Defaults to each parameter's `grad`.
        lr (float, optional): Step size
        betas (tuple, optional): Decay rates of the first and second moments
        eps (float, optional): Denominator guard

    Returns:
        ParamStore: The same store, with `step` incremented

    Raises:
        NumericalError: If any gradient entry is NaN or infinite
    """
    if store.frozen:
        raise ConfigurationError("Cannot apply an optimizer step to a frozen ParamStore")
    if grads is None:
        grads = store.grads()
    bad = {}
    for name in store.params:
        if name not in grads:
            raise ConfigurationError(f"No gradient for parameter {name}")
        nonfinite = int(np.count_nonzero(~np.isfinite(grads[name])))
        if nonfinite:
            bad[name] = nonfinite
    if bad:
        logger.error("Aborting optimizer step %d: non-finite gradients in %s", store.step, bad)
        raise NumericalError(
            "Non-finite gradient", diagnostics={"step": store.step, "parameters": bad}
        )

    beta1, beta2 = betas
    store.step += 1
    bc1 = 1.0 - beta1**store.step
    bc2 = 1.0 - beta2**store.step
    for name, param in store.params.items():
        g = grads[name]
        m = store.first_moment[name]
        v = store.second_moment[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        param.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return store


class Adam:
    """Holds the hyperparameters of `adam_step` so trainers can call `step(store)`."""

    def __init__(self, **kwargs):
        self.lr = kwargs.get("lr", 5e-4)
        self.betas = (kwargs.get("beta1", 0.9), kwargs.get("beta2", 0.999))
        self.eps = kwargs.get("eps", 1e-8)

    def __repr__(self):
        return f"occlab Adam - lr {self.lr}"

    def step(self, store):
        return adam_step(store, lr=self.lr, betas=self.betas, eps=self.eps)
