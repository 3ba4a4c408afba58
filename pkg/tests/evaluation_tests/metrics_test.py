import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.evaluation import ConfusionCounts, confusion_counts, occupancy_metrics, psnr


def test_confusion_example():
    counts = ConfusionCounts(8, 2, 2, 88)
    assert counts.accuracy == pytest.approx(0.96)
    assert counts.precision == pytest.approx(0.8)
    assert counts.recall == pytest.approx(0.8)
    assert counts.f1 == pytest.approx(0.8)
    assert counts.occupancy_ratio == pytest.approx(0.1)


def test_counts_from_grids():
    reference = np.zeros((4, 4, 4), dtype=bool)
    reference[0, :, :2] = True
    predicted = np.zeros_like(reference)
    predicted[0, :, 1:3] = True
    counts = confusion_counts(predicted, reference)
    assert (counts.tp, counts.fp, counts.fn, counts.tn) == (4, 4, 4, 52)
    assert counts.total == 64


def test_vacuous_precision_and_recall():
    empty = np.zeros((8, 8, 8), dtype=bool)
    row = occupancy_metrics(empty, empty)
    assert row["Precision"] == 1.0 and row["Recall"] == 1.0 and row["F1"] == 1.0
    full = np.ones_like(empty)
    assert occupancy_metrics(empty, full)["Precision"] == 0.0
    assert occupancy_metrics(full, empty)["Recall"] == 0.0
    assert occupancy_metrics(full, empty)["F1"] == 0.0


def test_metrics_row_has_counts():
    grid = np.random.default_rng(0).random((8, 8, 8)) > 0.5
    row = occupancy_metrics(grid, grid)
    assert row["Accuracy"] == 1.0
    assert row["TP"] + row["TN"] == 512
    assert row["Occupancy ratio"] == pytest.approx(grid.mean())


def test_grid_shapes_must_match():
    with pytest.raises(ConfigurationError):
        confusion_counts(np.zeros((4, 4, 4)), np.zeros((8, 8, 8)))


def test_psnr():
    a = np.zeros((4, 4, 3))
    assert psnr(a, a) == float("inf")
    assert psnr(a, a + 0.1) == pytest.approx(20.0)
    assert psnr(a, a + 1.0) == pytest.approx(0.0)
    with pytest.raises(ConfigurationError):
        psnr(a, np.zeros((2, 2, 3)))


def test_psnr_is_symmetric_and_falls_with_noise():
    rng = np.random.default_rng(5)
    image = rng.random((6, 6, 3))
    noise = rng.standard_normal(image.shape)
    values = []
    for scale in (0.01, 0.03, 0.1, 0.3):
        noisy = image + scale * noise
        assert psnr(image, noisy) == psnr(noisy, image)
        values.append(psnr(image, noisy))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_f1_is_harmonic_mean_of_precision_and_recall():
    rng = np.random.default_rng(6)
    for tp, fp, fn, tn in rng.integers(0, 50, size=(200, 4)):
        counts = ConfusionCounts(tp, fp, fn, tn)
        p, r = counts.precision, counts.recall
        expected = 2 * p * r / (p + r) if p + r > 0 else 0.0
        assert counts.f1 == pytest.approx(expected)
        assert 0.0 <= counts.f1 <= 1.0


def test_vacuous_counts():
    assert ConfusionCounts(0, 0, 5, 10).precision == 0.0
    assert ConfusionCounts(0, 0, 0, 10).precision == 1.0
    assert ConfusionCounts(0, 4, 0, 10).recall == 0.0
    assert ConfusionCounts(0, 0, 0, 10).recall == 1.0
    assert ConfusionCounts(0, 0, 0, 10).f1 == 1.0
    assert ConfusionCounts(0, 0, 0, 0).accuracy == 1.0
