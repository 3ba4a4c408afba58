import numpy as np

from ..diffcore import ops
from ..errors import ConfigurationError, reject_unknown_keys, require
from .encoding import encoded_size, positional_encode


__all__ = [
    "NetworkConfig",
    "MLP",
    "GateVector",
    "OccupancyNetwork",
    "SceneSubNetwork",
    "SceneHead",
    "EmptySpaceNetwork",
    "EmptyHead",
    "count_parameters",
    "EMPTY_STRUCTURES",
]

EMPTY_STRUCTURES = {"identity": 0, "mlp4": 4, "mlp7": 7}


class NetworkConfig:
    """
    Sizes of the occupancy network, the scene sub-networks, the empty-space network and the two
    prediction heads. The defaults are the desk-scale configuration; the mega preset occupancy
    network is NetworkConfig(n_scene=8, width=256, frequency_bands=10).
    """

    KEYS = (
        "n_scene",
        "width",
        "occupancy_width",
        "occupancy_layers",
        "scene_layers",
        "frequency_bands",
        "direction_bands",
        "head_width",
        "empty_head_width",
        "empty_structure",
        "layer_norm_eps",
    )

    def __init__(self, **kwargs):
        reject_unknown_keys("network", kwargs, self.KEYS)
        self.n_scene = kwargs.get("n_scene", 2)
        self.width = kwargs.get("width", 64)
        self.occupancy_width = kwargs.get("occupancy_width", 24)
        self.occupancy_layers = kwargs.get("occupancy_layers", 4)
        self.scene_layers = kwargs.get("scene_layers", 7)
        self.frequency_bands = kwargs.get("frequency_bands", 6)
        self.direction_bands = kwargs.get("direction_bands", 4)
        self.head_width = kwargs.get("head_width", 64)
        self.empty_head_width = kwargs.get("empty_head_width", 32)
        self.empty_structure = kwargs.get("empty_structure", "identity")
        self.layer_norm_eps = kwargs.get("layer_norm_eps", 1e-5)

        require(self.n_scene >= 1, "network.n_scene must be at least 1")
        require(self.occupancy_layers >= 2, "network.occupancy_layers must be at least 2")
        require(self.scene_layers >= 1, "network.scene_layers must be at least 1")
        require(self.frequency_bands >= 0, "network.frequency_bands must be nonnegative")
        require(self.occupancy_width >= 2, "network.occupancy_width must be at least 2")
        if self.empty_structure not in EMPTY_STRUCTURES:
            raise ConfigurationError(
                f"network.empty_structure must be one of {sorted(EMPTY_STRUCTURES)}"
            )

    def __repr__(self):
        return f"occlab NetworkConfig - n={self.n_scene}, width {self.width}"

    @property
    def routes(self):
        """n scene sub-networks plus the empty-space network."""
        return self.n_scene + 1

    @property
    def input_size(self):
        return encoded_size(self.frequency_bands)

    @property
    def direction_size(self):
        return encoded_size(self.direction_bands)

    @property
    def empty_trunk_layers(self):
        return EMPTY_STRUCTURES[self.empty_structure]

    def derive(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return NetworkConfig(**values)

    def as_dict(self):
        return {key: getattr(self, key) for key in self.KEYS}


###########################################################
# Building blocks
###########################################################


def _mlp_parameter_count(sizes):
    return int(sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:])))


class MLP:
    """
    A stack of dense layers registered in a ParamStore under `<prefix>.<i>.weight|bias`. ReLU
    follows every layer except, when `final_activation` is False, the last one.
    """

    def __init__(self, store, prefix, sizes, final_activation=True):
        self.prefix = prefix
        self.sizes = list(sizes)
        self.final_activation = final_activation
        self.layers = []
        for i, (a, b) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            weight = store.add(f"{prefix}.{i}.weight", (a, b), fan_in=a)
            bias = store.add(f"{prefix}.{i}.bias", (1, b), init="zeros")
            self.layers.append((weight, bias))

    def __repr__(self):
        return f"occlab MLP - {self.prefix} {self.sizes}"

    def __call__(self, x):
        last = len(self.layers) - 1
        for i, (weight, bias) in enumerate(self.layers):
            x = ops.linear(x, weight, bias)
            if i < last or self.final_activation:
                x = ops.relu(x)
        return x

    @property
    def parameter_count(self):
        return _mlp_parameter_count(self.sizes)


class GateVector:
    """
    Normalized occupancy values for a batch of points: `values` is a (B, n+1) DiffValue whose
    last column belongs to the empty-space network, `top1_index` the dispatch decision.
    """

    def __init__(self, values, n_scene):
        self.values = values
        self.n_scene = n_scene
        # np.argmax returns the first maximum, so ties go to the lowest index
        self.top1_index = np.argmax(values.data, axis=1)

    def __repr__(self):
        return f"occlab GateVector - {self.values.shape[0]} points, n={self.n_scene}"

    def __len__(self):
        return self.values.shape[0]

    @property
    def routed_to_empty(self):
        return self.top1_index == self.n_scene

    def gate(self, route):
        """(B, 1) column of gate values for one route."""
        return ops.columns(self.values, route, route + 1)

    def scene_mass(self):
        """(B, 1) sum of the n scene gate values."""
        return ops.sum(ops.columns(self.values, 0, self.n_scene), axis=1)


###########################################################
# Sub-networks
###########################################################


class OccupancyNetwork:
    """
    The occupancy classifier O: input layer, layer-norm, inner layers and an output layer of n+1
    logits, followed by softmax.
    """

    def __init__(self, store, config, prefix="occupancy"):
        self.config = config
        self.store = store
        w = config.occupancy_width
        self.input_layer = MLP(store, f"{prefix}.input", [config.input_size, w], False)
        self.norm_gain = store.add(f"{prefix}.norm.gain", (1, w), init="ones")
        self.norm_shift = store.add(f"{prefix}.norm.shift", (1, w), init="zeros")
        inner = [w] * (config.occupancy_layers - 1)
        self.body = MLP(store, f"{prefix}.body", inner + [config.routes], False)

    def __repr__(self):
        return f"occlab OccupancyNetwork - {self.parameter_count} parameters"

    @property
    def parameter_count(self):
        return count_parameters(self.config, "occupancy")

    def __call__(self, encoded):
        h = self.input_layer(encoded)
        h = ops.layer_norm(h, self.norm_gain, self.norm_shift, self.config.layer_norm_eps)
        h = ops.relu(h)
        for i, (weight, bias) in enumerate(self.body.layers):
            h = ops.linear(h, weight, bias)
            if i < len(self.body.layers) - 1:
                h = ops.relu(h)
        return GateVector(ops.softmax(h), self.config.n_scene)

    def predict_occupied(self, positions, chunk=65536):
        """
        Occupied means the top-1 route is one of the scene sub-networks. No threshold is
        involved. The result depends only on the positions and the parameter values.

        Args:
            positions (np.ndarray): (B, 3) points
            chunk (int, optional): Points evaluated per forward pass

        Returns:
            np.ndarray: (B,) booleans
        """
        positions = np.atleast_2d(positions)
        out = np.zeros(positions.shape[0], dtype=bool)
        for lo in range(0, positions.shape[0], chunk):
            encoded = ops.constant(
                positional_encode(positions[lo : lo + chunk], self.config.frequency_bands)
            )
            gates = self(encoded)
            out[lo : lo + chunk] = gates.top1_index != self.config.n_scene
        return out


class SceneSubNetwork:
    """One of the n identical scene trunks S_k: `scene_layers` ReLU layers of `width` channels."""

    def __init__(self, store, config, index, prefix="scene"):
        self.index = index
        sizes = [config.input_size] + [config.width] * config.scene_layers
        self.trunk = MLP(store, f"{prefix}.{index}", sizes, True)

    def __call__(self, encoded):
        return self.trunk(encoded)


class SceneHead:
    """
    The shared head H_s. Density comes from the (gate-scaled) feature alone; color also sees the
    encoded view direction.
    """

    def __init__(self, store, config, prefix="scene_head"):
        self.density = MLP(store, f"{prefix}.density", [config.width, 1], False)
        self.color = MLP(
            store,
            f"{prefix}.color",
            [config.width + config.direction_size, config.head_width, 3],
            False,
        )

    def __call__(self, feature, encoded_direction):
        raw_sigma = self.density(feature)
        raw_rgb = self.color(ops.concat_cols([feature, encoded_direction]))
        return ops.concat_cols([raw_sigma, raw_rgb])


class EmptySpaceNetwork:
    """
    E_e. With the default "identity" structure it has no parameters and returns its input; the
    "mlp4" and "mlp7" ablations insert a ReLU trunk.
    """

    def __init__(self, store, config, prefix="empty"):
        layers = config.empty_trunk_layers
        if layers == 0:
            self.trunk = None
            self.output_size = config.input_size
        else:
            sizes = [config.input_size] + [config.width] * layers
            self.trunk = MLP(store, f"{prefix}.trunk", sizes, True)
            self.output_size = config.width

    def __call__(self, encoded):
        if self.trunk is None:
            return encoded
        return self.trunk(encoded)


class EmptyHead:
    """H_e: a two-layer head on position features only."""

    def __init__(self, store, config, input_size, prefix="empty_head"):
        self.mlp = MLP(store, prefix, [input_size, config.empty_head_width, 4], False)

    def __call__(self, feature):
        return self.mlp(feature)


###########################################################
# Parameter accounting
###########################################################


def count_parameters(config, component="field", resolution=None):
    """
    Exact parameter count of a named component, computed from the configuration alone.

    Args:
        config (NetworkConfig): Network sizes
        component (str, optional): "occupancy", "scene_subnetwork", "scene", "scene_head",
            "empty_trunk", "empty_head", "field" (everything), "radiance" (one trunk plus
            H_s, the plain field used for guided training) or "grid" (cells of a dense grid
            of the given `resolution`)
        resolution (int, optional): Grid resolution for component "grid"

    Returns:
        int: Number of scalar parameters
    """
    c = config
    w = c.width
    if component == "occupancy":
        ow = c.occupancy_width
        sizes = [c.input_size] + [ow] * (c.occupancy_layers - 1) + [c.routes]
        return _mlp_parameter_count(sizes) + 2 * ow
    if component == "scene_subnetwork":
        return _mlp_parameter_count([c.input_size] + [w] * c.scene_layers)
    if component == "scene":
        return c.n_scene * count_parameters(c, "scene_subnetwork")
    if component == "scene_head":
        return _mlp_parameter_count([w, 1]) + _mlp_parameter_count(
            [w + c.direction_size, c.head_width, 3]
        )
    if component == "empty_trunk":
        layers = c.empty_trunk_layers
        return 0 if layers == 0 else _mlp_parameter_count([c.input_size] + [w] * layers)
    if component == "empty_head":
        size = c.input_size if c.empty_trunk_layers == 0 else w
        return _mlp_parameter_count([size, c.empty_head_width, 4])
    if component == "field":
        return sum(
            count_parameters(c, part)
            for part in ("occupancy", "scene", "scene_head", "empty_trunk", "empty_head")
        )
    if component == "radiance":
        return count_parameters(c, "scene_subnetwork") + count_parameters(c, "scene_head")
    if component == "grid":
        if resolution is None or resolution < 1:
            raise ConfigurationError("component 'grid' needs a resolution >= 1")
        return int(resolution) ** 3
    raise ConfigurationError(f"Unknown component {component}")
