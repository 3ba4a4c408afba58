import numpy as np

from ..errors import ConfigurationError


__all__ = ["DiffValue", "as_value"]


class DiffValue:
    """
    A node of a reverse-mode computation graph. It holds a float64 array in `data`, an
    accumulator of the same shape in `grad`, and the backward edges that lead to the values it
    was computed from.

    Leaves are either parameters (requires_grad=True) or constants (requires_grad=False).
    Interior nodes require a gradient when any of their parents does, and only those nodes are
    visited by `backward`.
    """

    def __init__(self, data, parents=(), backward_fn=None, **kwargs):
        """
        Args:
            data (array_like): The value of the node, converted to float64
            parents (tuple of DiffValue, optional): Nodes this value was computed from
            backward_fn (callable, optional): Receives this node's gradient and adds the
                contributions into the parents' `grad`
            requires_grad (bool, optional): Only meaningful for leaves. Defaults to True.
            op (str, optional): Name of the producing operation, used in __repr__
        """
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self.parents = tuple(parents)
        self._backward = backward_fn
        self.op = kwargs.get("op", "leaf")
        if self.parents:
            self.requires_grad = any(p.requires_grad for p in self.parents)
        else:
            self.requires_grad = kwargs.get("requires_grad", True)

    def __repr__(self):
        return f"occlab DiffValue - {self.op} {self.shape}"

    @property
    def shape(self):
        return self.data.shape

    @property
    def is_leaf(self):
        return not self.parents

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def accumulate(self, gradient):
        """Adds a gradient contribution. Nodes that do not require a gradient ignore it."""
        if self.requires_grad:
            self.grad += gradient

    ###########################################################
    # Backward pass
    ###########################################################

    def topological_order(self):
        """
        Returns every node that requires a gradient and is reachable from this one, parents
        before children. The traversal is iterative so deep graphs do not hit the recursion
        limit.

        Returns:
            list: DiffValue nodes in topological order
        """
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited or not node.requires_grad:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node.parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, seed=None):
        """
        Propagates gradients from this node to every node it depends on. Each node's backward
        function runs exactly once, after all of its consumers have contributed.

        Args:
            seed (array_like, optional): Gradient of the final objective with respect to this
                node. Defaults to ones, which is the usual choice for a scalar loss.
        """
        if seed is None:
            seed = np.ones_like(self.data)
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != self.data.shape:
            raise ConfigurationError(
                f"Seed shape {seed.shape} does not match value shape {self.data.shape}"
            )
        order = self.topological_order()
        self.grad = self.grad + seed
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    ###########################################################
    # Operators
    ###########################################################

    def __add__(self, other):
        from .ops import add

        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from .ops import add, mul

        return add(self, mul(as_value(other), -1.0))

    def __rsub__(self, other):
        from .ops import add, mul

        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from .ops import mul

        return mul(self, -1.0)

    def __truediv__(self, other):
        from .ops import divide

        return divide(self, other)


def as_value(x):
    """Wraps arrays and scalars into constant DiffValue leaves, passes DiffValues through."""
    if isinstance(x, DiffValue):
        return x
    return DiffValue(x, requires_grad=False, op="constant")
