import numpy as np
import pytest

from occlab.diffcore import ParamStore, gradcheck, ops
from occlab.errors import ConfigurationError
from occlab.fields import (
    NetworkConfig,
    OccupancyField,
    OccupancyNetwork,
    RadianceField,
    SceneHead,
    SceneSubNetwork,
    count_parameters,
    dispatch,
    encoded_size,
    positional_encode,
)
from occlab.losses import rendering_loss
from occlab.rendering import RayBundle, SampleBatch, composite


def small_config(**kwargs):
    values = dict(n_scene=2, width=16, occupancy_width=16, frequency_bands=2, direction_bands=1)
    values.update(kwargs)
    return NetworkConfig(**values)


def test_mega_occupancy_parameter_count():
    config = NetworkConfig(n_scene=8, width=256, occupancy_width=256, frequency_bands=10)
    assert count_parameters(config, "occupancy") == 150793


def test_desk_occupancy_is_small_next_to_grid():
    config = NetworkConfig()
    assert count_parameters(config, "occupancy") == 2283
    assert count_parameters(config, "occupancy") <= 0.1 * count_parameters(
        config, "grid", resolution=32
    )


def test_grid_parameter_counts():
    config = NetworkConfig()
    assert count_parameters(config, "grid", resolution=128) == 2097152
    assert count_parameters(config, "grid", resolution=512) == 134217728
    with pytest.raises(ConfigurationError):
        count_parameters(config, "grid")


@pytest.mark.parametrize("structure", ["identity", "mlp4", "mlp7"])
def test_counted_parameters_match_registered(structure):
    config = small_config(empty_structure=structure)
    field = OccupancyField(config, seed=0)
    assert field.store.count() == count_parameters(config, "field")
    assert field.store.count("occupancy") == count_parameters(config, "occupancy")


def test_radiance_parameters_match_registered():
    config = small_config(scene_layers=8)
    field = RadianceField(config)
    assert field.store.count() == count_parameters(config, "radiance")


def test_unknown_network_key_raises():
    with pytest.raises(ConfigurationError):
        NetworkConfig(n_scenes=2)
    with pytest.raises(ConfigurationError):
        NetworkConfig(empty_structure="mlp5")


def test_positional_encoding_layout():
    x = np.array([[0.5, -0.25, 0.0]])
    encoded = positional_encode(x, 2)
    assert encoded.shape == (1, encoded_size(2)) == (1, 15)
    assert np.allclose(encoded[0, :3], x[0])
    assert np.allclose(encoded[0, 3:6], np.sin(np.pi * x[0]))
    assert np.allclose(encoded[0, 12:15], np.cos(2 * np.pi * x[0]))


def test_positional_encoding_of_origin():
    assert positional_encode([0.0, 0.0, 0.0], 1)[0].tolist() == [0, 0, 0, 0, 0, 0, 1, 1, 1]


def test_positional_encoding_separates_lattice_points():
    axis = np.linspace(-1.0, 1.0, 17)
    lattice = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    encoded = positional_encode(lattice, 6)
    assert encoded.shape == (17**3, encoded_size(6))
    assert np.unique(encoded, axis=0).shape[0] == 17**3


def test_gates_are_normalized():
    config = small_config()
    store = ParamStore(0)
    network = OccupancyNetwork(store, config)
    x = ops.constant(positional_encode(np.random.default_rng(0).uniform(-1, 1, (50, 3)), 2))
    gates = network(x)
    assert gates.values.shape == (50, 3)
    assert np.allclose(gates.values.data.sum(axis=1), 1.0)
    assert np.all(gates.top1_index == np.argmax(gates.values.data, axis=1))


def test_dispatch_partitions_and_inverts():
    top1 = np.array([2, 0, 1, 2, 2, 0])
    routing = dispatch(top1, routes=3)
    assert routing.sizes.tolist() == [2, 1, 3]
    assert sorted(np.concatenate(routing.index_lists).tolist()) == list(range(6))
    values = np.arange(6) * 10
    assert np.array_equal(routing.scatter(routing.gather(values)), values)


def test_dispatch_ties_go_to_lowest_index():
    from occlab.fields import GateVector

    gates = GateVector(ops.constant(np.array([[0.5, 0.5, 0.0], [0.2, 0.4, 0.4]])), 2)
    assert gates.top1_index.tolist() == [0, 1]


def test_field_forward_keeps_input_order():
    field = OccupancyField(small_config(), seed=1)
    rng = np.random.default_rng(1)
    positions = rng.uniform(-1, 1, (40, 3))
    directions = rng.normal(size=(40, 3))
    out = field.forward(positions, directions)
    assert out.sigma.shape == (40, 1)
    assert out.rgb.shape == (40, 3)
    assert np.all(out.sigma.data >= 0)
    assert out.route_sizes.sum() == 40
    # each point evaluated alone gives the same result as in the batch
    single = field.forward(positions[7:8], directions[7:8])
    assert np.allclose(single.sigma.data[0], out.sigma.data[7])
    assert np.allclose(single.rgb.data[0], out.rgb.data[7])


def test_predict_occupied_matches_routing():
    field = OccupancyField(small_config(), seed=2)
    positions = np.random.default_rng(2).uniform(-1, 1, (200, 3))
    out = field.forward(positions, np.tile([0.0, 0.0, 1.0], (200, 1)))
    assert np.array_equal(field.predict_occupied(positions), ~out.routed_to_empty)


def two_sample_batch():
    rays = RayBundle([[0.1, -0.2, -0.5]], [[0.0, 0.0, 1.0]], [0.0], [1.0])
    t = np.array([0.3, 0.7])
    deltas = np.array([0.4, 0.3])
    return SampleBatch(rays, t, deltas, [0, 2], t - 0.1, t + 0.1)


def test_rendering_loss_gradient_through_gates_matches_finite_differences():
    field = OccupancyField(small_config(), seed=3)
    samples = two_sample_batch()
    target = np.array([[0.2, 0.6, 0.4]])
    weight = field.store["occupancy.body.2.weight"]
    bias = field.store["occupancy.body.2.bias"]

    def fn(w, b):
        out = field.forward(samples.positions, samples.directions)
        color, _ = composite(out.sigma, out.rgb, samples)
        return rendering_loss(color, target)

    assert gradcheck(fn, [weight, bias]) < 1e-5
    assert np.any(weight.grad != 0)


def test_zero_output_layer_gives_uniform_gates():
    for n_scene in (1, 2, 5):
        config = small_config(n_scene=n_scene)
        store = ParamStore(n_scene)
        network = OccupancyNetwork(store, config)
        store["occupancy.body.2.weight"].data[:] = 0.0
        store["occupancy.body.2.bias"].data[:] = 0.0
        x = ops.constant(positional_encode(np.random.default_rng(0).uniform(-1, 1, (20, 3)), 2))
        gates = network(x)
        assert np.allclose(gates.values.data, 1.0 / (n_scene + 1))


def test_gate_scales_scene_features_linearly():
    config = small_config()
    store = ParamStore(4)
    scene = SceneSubNetwork(store, config, 0)
    head = SceneHead(store, config)
    rng = np.random.default_rng(4)
    x = ops.constant(positional_encode(rng.uniform(-1, 1, (10, 3)), 2))
    gate = rng.uniform(0.05, 1.0, (10, 1))

    single = ops.scale_rows(scene(x), ops.constant(gate))
    double = ops.scale_rows(scene(x), ops.constant(2.0 * gate))
    assert np.allclose(double.data, 2.0 * single.data)

    # the density layer is affine, so its bias-free part doubles too
    density_bias = store["scene_head.density.0.bias"].data
    assert np.allclose(
        head.density(double).data - density_bias,
        2.0 * (head.density(single).data - density_bias),
    )


def test_empty_batch():
    field = OccupancyField(small_config())
    out = field.forward(np.zeros((0, 3)), np.zeros((0, 3)))
    assert len(out) == 0
    sigma, rgb, empty = field.query(np.zeros((0, 3)))
    assert sigma.shape == (0,)
