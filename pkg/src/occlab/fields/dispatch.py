import numpy as np


__all__ = ["Dispatch", "dispatch"]


class Dispatch:
    """
    Partition of a batch into the n+1 routes chosen by top-1 gating, with the permutation that
    groups points by route and its inverse.

    `order` lists point indices route by route; `inverse` maps them back, so
    scatter(gather(x)) == x for any per-point array.
    """

    def __init__(self, top1_index, routes):
        self.top1_index = np.asarray(top1_index, dtype=np.int64)
        self.routes = routes
        self.index_lists = [np.flatnonzero(self.top1_index == k) for k in range(routes)]
        if self.top1_index.size:
            self.order = np.concatenate(self.index_lists)
        else:
            self.order = np.zeros(0, dtype=np.int64)
        self.inverse = np.empty_like(self.order)
        self.inverse[self.order] = np.arange(self.order.size)

    def __repr__(self):
        return f"occlab Dispatch - sizes {self.sizes.tolist()}"

    @property
    def sizes(self):
        return np.array([idx.size for idx in self.index_lists], dtype=np.int64)

    def gather(self, array):
        return np.asarray(array)[self.order]

    def scatter(self, array):
        return np.asarray(array)[self.inverse]


def dispatch(gates, routes=None):
    """
    Assigns every point to exactly one route.

    Args:
        gates (GateVector or array_like): Gates of the batch, or their top-1 indices
        routes (int, optional): Number of routes; taken from the GateVector when omitted

    Returns:
        Dispatch: Per-route index lists and the inverse permutation
    """
    if hasattr(gates, "top1_index"):
        return Dispatch(gates.top1_index, routes or gates.n_scene + 1)
    return Dispatch(gates, routes)
