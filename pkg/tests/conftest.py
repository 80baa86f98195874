"""Shared fixtures: digit images upsampled to 28x28 and synthetic blobs."""

import numpy as np
import pytest
from scipy.ndimage import zoom
from sklearn.datasets import load_digits

from otmorph import GridMeasure, GridShape, normalize_to_measure

DIGIT_SHAPE = GridShape(28, 28)


def tv(a: GridMeasure, b: GridMeasure) -> float:
    """Total variation distance between two measures on the same grid."""
    return 0.5 * float(np.abs(a.mass - b.mass).sum())


def gaussian_blob(shape: GridShape, row: float, col: float, sigma: float) -> GridMeasure:
    rr, cc = np.meshgrid(
        np.arange(shape.rows, dtype=float),
        np.arange(shape.cols, dtype=float),
        indexing="ij",
    )
    img = np.exp(-(((rr - row) ** 2 + (cc - col) ** 2) / (2.0 * sigma * sigma)))
    return normalize_to_measure(img, shape)


def dirac(shape: GridShape, row: int, col: int = 0) -> GridMeasure:
    img = np.zeros((shape.rows, shape.cols))
    img[row, col] = 1.0
    return normalize_to_measure(img, shape)


@pytest.fixture(scope="session")
def digits_28():
    """(images, labels): digit images as 28x28 measures, grouped by label.

    Returns a dict label -> list of GridMeasure, at least 20 per label.
    """
    data = load_digits()
    by_label = {d: [] for d in range(10)}
    for img, label in zip(data.images, data.target):
        if len(by_label[label]) >= 30:
            continue
        big = zoom(img, 28 / 8, order=1)
        big = np.clip(big, 0.0, None)
        if big.sum() <= 0:
            continue
        by_label[label].append(normalize_to_measure(big, DIGIT_SHAPE))
    return by_label


@pytest.fixture(scope="session")
def digit_vectors():
    """All digit images as flat measure vectors (count, 784) for learning."""
    data = load_digits()
    rows = []
    for img in data.images:
        big = np.clip(zoom(img, 28 / 8, order=1), 0.0, None)
        s = big.sum()
        if s > 0:
            rows.append(big.ravel() / s)
    return np.asarray(rows)
