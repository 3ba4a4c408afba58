import numpy as np

from ..errors import ConfigurationError


__all__ = [
    "ConfusionCounts",
    "confusion_counts",
    "occupancy_metrics",
    "psnr",
    "METRIC_COLUMNS",
]

METRIC_COLUMNS = ["Accuracy", "Precision", "Recall", "F1", "Occupancy ratio"]


class ConfusionCounts:
    """
    Cell-level confusion matrix of a predicted occupancy grid against a reference, with
    occupied as the positive class.

    Precision is 1 when nothing is predicted occupied and nothing should be, 0 when nothing is
    predicted but something should be. Recall follows the same rule for an empty reference.
    """

    def __init__(self, tp, fp, fn, tn):
        self.tp = int(tp)
        self.fp = int(fp)
        self.fn = int(fn)
        self.tn = int(tn)

    def __repr__(self):
        return f"occlab ConfusionCounts - TP={self.tp} FP={self.fp} FN={self.fn} TN={self.tn}"

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self):
        return (self.tp + self.tn) / self.total if self.total else 1.0

    @property
    def precision(self):
        predicted = self.tp + self.fp
        if predicted == 0:
            return 1.0 if self.fn == 0 else 0.0
        return self.tp / predicted

    @property
    def recall(self):
        actual = self.tp + self.fn
        if actual == 0:
            return 1.0 if self.fp == 0 else 0.0
        return self.tp / actual

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0 else 0.0

    @property
    def occupancy_ratio(self):
        """Share of cells predicted occupied, the part that still reaches the main field."""
        return (self.tp + self.fp) / self.total if self.total else 0.0

    def as_row(self):
        return {
            "Accuracy": self.accuracy,
            "Precision": self.precision,
            "Recall": self.recall,
            "F1": self.f1,
            "Occupancy ratio": self.occupancy_ratio,
            "TP": self.tp,
            "FP": self.fp,
            "FN": self.fn,
            "TN": self.tn,
        }


def confusion_counts(predicted, reference):
    predicted = np.asarray(predicted, dtype=bool)
    reference = np.asarray(reference, dtype=bool)
    if predicted.shape != reference.shape:
        raise ConfigurationError(
            f"Occupancy grids differ in resolution: {predicted.shape} vs {reference.shape}"
        )
    return ConfusionCounts(
        np.count_nonzero(predicted & reference),
        np.count_nonzero(predicted & ~reference),
        np.count_nonzero(~predicted & reference),
        np.count_nonzero(~predicted & ~reference),
    )


def occupancy_metrics(predicted, reference):
    """
    Accuracy, precision, recall, F1 and occupancy ratio of a predicted grid.

    Args:
        predicted (np.ndarray): Boolean grid
        reference (np.ndarray): Boolean grid of the same shape

    Returns:
        dict: The metric columns plus the raw confusion counts
    """
    return confusion_counts(predicted, reference).as_row()


def psnr(a, b, max_value=1.0):
    """
    Peak signal-to-noise ratio in dB. Identical images give float('inf').
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"psnr: image shapes differ, {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(max_value**2 / mse))
