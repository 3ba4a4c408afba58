import numpy as np
import pytest

from occlab.diffcore import DiffValue, gradcheck, ops
from occlab.errors import ConfigurationError
from occlab.fields import GateVector
from occlab.losses import (
    LossWeights,
    RoutingStats,
    balanced_loss,
    density_loss,
    density_loss_terms,
    final_loss,
    imbalanced_occupancy_loss,
    rendering_loss,
)


def stats_for(f, n, v):
    return RoutingStats.from_fractions(f, f, n, v)


###########################################################
# Rendering loss
###########################################################


def test_rendering_loss_is_zero_on_match():
    target = np.random.default_rng(0).random((5, 3))
    assert rendering_loss(DiffValue(target.copy()), target).item() == 0.0


def test_rendering_loss_constant_offset():
    target = np.random.default_rng(1).random((7, 3))
    loss = rendering_loss(DiffValue(target + 0.1), target)
    assert loss.item() == pytest.approx(0.03)


def test_rendering_loss_gradient():
    rng = np.random.default_rng(2)
    for i in range(20):
        target = rng.random((6, 3))
        predicted = DiffValue(rng.random((6, 3)))
        assert gradcheck(lambda p: rendering_loss(p, target), [predicted], seed=i) < 1e-5


def test_rendering_loss_shape_mismatch():
    with pytest.raises(ConfigurationError):
        rendering_loss(DiffValue(np.zeros((2, 3))), np.zeros((3, 3)))


###########################################################
# Routing losses
###########################################################


@pytest.mark.parametrize("n, v", [(2, 2), (8, 80), (3, 5)])
def test_imbalanced_loss_is_one_at_optimum(n, v):
    f = np.full(n + 1, 1.0 / (n + v))
    f[n] = v / (n + v)
    assert abs(imbalanced_occupancy_loss(stats_for(f, n, v)).item() - 1.0) < 1e-12


def test_imbalanced_loss_examples():
    assert imbalanced_occupancy_loss(stats_for([0.25, 0.25, 0.5], 2, 2)).item() == pytest.approx(
        1.0
    )
    assert imbalanced_occupancy_loss(stats_for([0.0, 0.0, 1.0], 2, 2)).item() == pytest.approx(
        2.0
    )


@pytest.mark.parametrize("n, v", [(2, 8), (3, 5), (1, 1)])
def test_imbalanced_loss_lower_bound(n, v):
    rng = np.random.default_rng(n * 100 + v)
    for f in rng.dirichlet(np.ones(n + 1), size=1000):
        assert imbalanced_occupancy_loss(stats_for(f, n, v)).item() >= 1.0 - 1e-12


def test_balanced_loss_examples():
    assert balanced_loss(stats_for(np.full(3, 1.0 / 3), 2, 8)).item() == pytest.approx(1.0)
    assert balanced_loss(stats_for([1.0, 0.0, 0.0], 2, 8)).item() == pytest.approx(3.0)
    rng = np.random.default_rng(3)
    for f in rng.dirichlet(np.ones(4), size=200):
        assert balanced_loss(stats_for(f, 3, 1)).item() >= 1.0 - 1e-12


def test_imbalanced_loss_rejects_zero_virtual_copies():
    with pytest.raises(ConfigurationError):
        imbalanced_occupancy_loss(stats_for([0.5, 0.5], 1, 0))


def test_from_fractions_checks_sizes():
    with pytest.raises(ConfigurationError):
        RoutingStats.from_fractions([0.5, 0.5], [0.5, 0.5], 2, 8)


def test_routing_stats_from_gates():
    logits = np.array([[3.0, 0.0, 0.0], [0.0, 0.0, 3.0], [0.0, 0.0, 3.0], [0.0, 3.0, 0.0]])
    gates = GateVector(ops.softmax(DiffValue(logits)), 2)
    stats = RoutingStats(gates, v=8)
    assert stats.f.tolist() == [0.25, 0.25, 0.5]
    assert stats.empty_fraction == 0.5
    assert np.allclose(stats.p.data.sum(), 1.0)


def test_imbalanced_loss_gradient_through_gates():
    rng = np.random.default_rng(4)
    for i in range(20):
        logits = DiffValue(rng.standard_normal((12, 3)))
        f = np.bincount(np.argmax(logits.data, axis=1), minlength=3) / 12.0

        def fn(z):
            p = ops.mean(ops.softmax(z), axis=0)
            return imbalanced_occupancy_loss(RoutingStats.from_fractions(f, p, 2, 8))

        assert gradcheck(fn, [logits], seed=i) < 1e-5


def test_imbalanced_loss_controls_the_empty_fraction():
    n, v, count = 2, 8, 10000
    logits = DiffValue(np.random.default_rng(5).standard_normal((count, n + 1)))
    lr = 5.0 * count / (n + v)
    for _ in range(2000):
        gates = GateVector(ops.softmax(logits), n)
        logits.zero_grad()
        imbalanced_occupancy_loss(RoutingStats(gates, v=v)).backward()
        logits.data -= lr * logits.grad
    fraction = np.mean(np.argmax(logits.data, axis=1) == n)
    assert abs(fraction - v / (n + v)) < 0.05


###########################################################
# Density loss
###########################################################


def test_density_loss_example():
    loss, sigma_e, sigma_s = density_loss_terms(
        DiffValue([[0.9], [0.8]]), [0.1, 0.1], DiffValue([[0.7]]), [10.0]
    )
    assert sigma_e == pytest.approx(0.085)
    assert sigma_s == pytest.approx(7.0)
    assert loss.item() == pytest.approx(0.085 / 7.0)


def test_density_loss_symmetric_case_is_one():
    loss, _, _ = density_loss_terms(
        DiffValue(np.full((3, 1), 0.6)),
        np.full(3, 2.0),
        DiffValue(np.full((2, 1), 0.6)),
        [2.0, 2.0],
    )
    assert loss.item() == pytest.approx(1.0)


def test_density_loss_skips_empty_sets():
    loss, _, _ = density_loss_terms(DiffValue(np.zeros((0, 1))), [], DiffValue([[0.5]]), [1.0])
    assert loss is None
    loss, _, sigma_s = density_loss_terms(DiffValue([[0.5]]), [1.0], DiffValue([[0.5]]), [0.0])
    assert loss is None and sigma_s == 0.0


def test_density_loss_detaches_sigma():
    logits = DiffValue(np.array([[0.0, 0.0, 2.0], [2.0, 0.0, 0.0], [0.0, 1.5, 0.0]]))
    sigma = DiffValue(np.array([[0.3], [4.0], [2.0]]))
    loss, _, _ = density_loss(GateVector(ops.softmax(logits), 2), sigma)
    loss.backward()
    assert np.all(sigma.grad == 0.0)
    assert np.any(logits.grad != 0.0)


def test_density_loss_gradient_through_gates():
    rng = np.random.default_rng(6)
    for i in range(20):
        logits = DiffValue(rng.standard_normal((10, 3)))
        sigma = rng.uniform(0.1, 5.0, 10)
        routed_empty = np.argmax(logits.data, axis=1) == 2
        if routed_empty.all() or not routed_empty.any():
            routed_empty[:2] = [True, False]
        empty = np.flatnonzero(routed_empty)
        scene = np.flatnonzero(~routed_empty)

        def fn(z):
            gates = ops.softmax(z)
            return density_loss_terms(
                ops.take_rows(ops.columns(gates, 2, 3), empty),
                sigma[empty],
                ops.take_rows(ops.sum(ops.columns(gates, 0, 2), axis=1), scene),
                sigma[scene],
            )[0]

        assert gradcheck(fn, [logits], seed=i) < 1e-5


def test_density_loss_drops_when_dense_points_move_to_scene():
    before, _, _ = density_loss_terms(DiffValue([[0.6]]), [8.0], DiffValue([[0.5]]), [8.0])
    after, _, _ = density_loss_terms(DiffValue([[0.4]]), [8.0], DiffValue([[0.7]]), [8.0])
    assert after.item() < before.item()


###########################################################
# Final loss
###########################################################


def test_final_loss_weighting():
    weights = LossWeights(w_r=1.0, w_o=0.0005, w_d=0.1)
    assert final_loss(2.0, 1.0, 0.5, weights).item() == pytest.approx(2.0505)
    only_render = LossWeights(w_r=1.0, w_o=0.0, w_d=0.0)
    assert final_loss(2.0, 1.0, 0.5, only_render).item() == pytest.approx(2.0)


def test_final_loss_skips_missing_terms():
    weights = LossWeights(w_r=1.0, w_o=0.01, w_d=0.1)
    assert final_loss(2.0, None, None, weights).item() == pytest.approx(2.0)


def test_loss_weights_must_be_nonnegative():
    with pytest.raises(ConfigurationError):
        LossWeights(w_o=-1.0)
    with pytest.raises(ConfigurationError):
        LossWeights(w_r=float("nan"))
