"""
Minimal reverse-mode differentiation over float64 matrices: the graph node (DiffValue), the
primitives the fields and losses are made of, named parameter storage and the Adam optimizer.
"""

from .value import DiffValue, as_value
from .params import ParamStore, Adam, adam_step
from .gradcheck import gradcheck
from . import ops

__all__ = ["DiffValue", "as_value", "ParamStore", "Adam", "adam_step", "gradcheck", "ops"]
