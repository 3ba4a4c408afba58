import numpy as np

from ..diffcore import ParamStore, ops
from .dispatch import dispatch
from .encoding import normalize_directions, positional_encode
from .networks import (
    EmptyHead,
    EmptySpaceNetwork,
    NetworkConfig,
    OccupancyNetwork,
    SceneHead,
    SceneSubNetwork,
    count_parameters,
)


__all__ = ["FieldOutput", "OccupancyField", "RadianceField", "decode_raw"]


def decode_raw(raw):
    """Splits a (B, 4) head output into softplus density and sigmoid color."""
    sigma = ops.softplus(ops.columns(raw, 0, 1))
    rgb = ops.sigmoid(ops.columns(raw, 1, 4))
    return sigma, rgb


class FieldOutput:
    """
    Density and color of a batch of points, in input order.

    Attributes:
        sigma (DiffValue): (B, 1) nonnegative densities
        rgb (DiffValue): (B, 3) colors in [0, 1]
        gates (GateVector or None): Occupancy values, None for fields without gating
        route_sizes (np.ndarray): Points evaluated by each route
    """

    def __init__(self, sigma, rgb, gates=None, route_sizes=None):
        self.sigma = sigma
        self.rgb = rgb
        self.gates = gates
        self.route_sizes = route_sizes

    def __repr__(self):
        return f"occlab FieldOutput - {len(self)} points"

    def __len__(self):
        return self.sigma.shape[0]

    @property
    def routed_to_empty(self):
        if self.gates is None:
            return np.zeros(len(self), dtype=bool)
        return self.gates.routed_to_empty


class _FieldBase:
    def _empty_output(self):
        return FieldOutput(ops.constant(np.zeros((0, 1))), ops.constant(np.zeros((0, 3))))

    def query(self, positions, directions=None, chunk=32768):
        """
        Evaluates the field without keeping the graph.

        Returns:
            tuple: (sigma (B,), rgb (B, 3), routed_to_empty (B,)) as numpy arrays
        """
        positions = np.atleast_2d(positions)
        if directions is None:
            directions = np.tile([0.0, 0.0, 1.0], (positions.shape[0], 1))
        sigma = np.zeros(positions.shape[0])
        rgb = np.zeros((positions.shape[0], 3))
        empty = np.zeros(positions.shape[0], dtype=bool)
        for lo in range(0, positions.shape[0], chunk):
            hi = lo + chunk
            out = self.forward(positions[lo:hi], directions[lo:hi])
            sigma[lo:hi] = out.sigma.data[:, 0]
            rgb[lo:hi] = out.rgb.data
            empty[lo:hi] = out.routed_to_empty
        return sigma, rgb, empty

    def query_density(self, positions, chunk=32768):
        return self.query(positions, None, chunk)[0]


class OccupancyField(_FieldBase):
    """
    The gated radiance field: occupancy network O, n scene sub-networks S_k sharing head H_s,
    and the empty-space network E_e with head H_e. Every point is evaluated by exactly one
    route, and the route's gate value scales the features it hands to its head.
    """

    def __init__(self, config=None, seed=0, **kwargs):
        self.config = config or NetworkConfig()
        self.store = kwargs.get("store") or ParamStore(seed)
        store = self.store
        self.occupancy = OccupancyNetwork(store, self.config)
        self.scenes = [
            SceneSubNetwork(store, self.config, k) for k in range(self.config.n_scene)
        ]
        self.scene_head = SceneHead(store, self.config)
        self.empty = EmptySpaceNetwork(store, self.config)
        self.empty_head = EmptyHead(store, self.config, self.empty.output_size)

    def __repr__(self):
        return f"occlab OccupancyField - n={self.config.n_scene}, {self.store.count()} parameters"

    @property
    def parameter_count(self):
        return count_parameters(self.config, "field")

    def encode(self, positions, directions):
        encoded = ops.constant(positional_encode(positions, self.config.frequency_bands))
        encoded_dirs = ops.constant(
            positional_encode(normalize_directions(directions), self.config.direction_bands)
        )
        return encoded, encoded_dirs

    def forward(self, positions, directions):
        """
        occupancy -> dispatch -> scene or empty route -> inverse permutation.

        Args:
            positions (np.ndarray): (B, 3) points in [-1, 1]^3
            directions (np.ndarray): (B, 3) view directions

        Returns:
            FieldOutput: Differentiable density and color in input order, plus the gates
        """
        if len(positions) == 0:
            return self._empty_output()
        encoded, encoded_dirs = self.encode(positions, directions)
        gates = self.occupancy(encoded)
        routing = dispatch(gates)
        parts = []
        for route, index in enumerate(routing.index_lists):
            if index.size == 0:
                continue
            x = ops.take_rows(encoded, index)
            gate = ops.take_rows(gates.gate(route), index)
            if route < self.config.n_scene:
                feature = ops.scale_rows(self.scenes[route](x), gate)
                parts.append(self.scene_head(feature, ops.take_rows(encoded_dirs, index)))
            else:
                feature = ops.scale_rows(self.empty(x), gate)
                parts.append(self.empty_head(feature))
        raw = ops.take_rows(ops.concat_rows(parts), routing.inverse)
        sigma, rgb = decode_raw(raw)
        return FieldOutput(sigma, rgb, gates, routing.sizes)

    def predict_occupied(self, positions, chunk=65536):
        return self.occupancy.predict_occupied(positions, chunk)


class RadianceField(_FieldBase):
    """
    A plain radiance field: one ReLU trunk followed by H_s, no gating. This is the main network
    trained under guided, grid-guided or dense sampling.
    """

    def __init__(self, config=None, seed=0, **kwargs):
        self.config = config or NetworkConfig(scene_layers=8)
        self.store = kwargs.get("store") or ParamStore(seed)
        self.trunk = SceneSubNetwork(self.store, self.config, 0, prefix="radiance")
        self.head = SceneHead(self.store, self.config, prefix="radiance_head")

    def __repr__(self):
        return f"occlab RadianceField - {self.store.count()} parameters"

    @property
    def parameter_count(self):
        return count_parameters(self.config, "radiance")

    def forward(self, positions, directions):
        if len(positions) == 0:
            return self._empty_output()
        encoded = ops.constant(positional_encode(positions, self.config.frequency_bands))
        encoded_dirs = ops.constant(
            positional_encode(normalize_directions(directions), self.config.direction_bands)
        )
        raw = self.head(self.trunk(encoded), encoded_dirs)
        sigma, rgb = decode_raw(raw)
        return FieldOutput(sigma, rgb, None, np.array([positions.shape[0]]))
