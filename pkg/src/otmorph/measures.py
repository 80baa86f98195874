"""Probability measures on pixel grids and the squared-Euclidean ground cost.

A grid measure is a non-negative vector over the ``rows x cols`` pixels of an
image (row-major order) summing to one.  The ground cost between pixels is
the squared Euclidean distance between pixel centers with each axis
normalized to [0, 1], so costs live in [0, 2] regardless of resolution and
the Gibbs kernel ``exp(-cost/eps)`` factorizes into two 1-D convolutions.

All types are immutable after construction; arrays are made read-only so
instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroInput, IndexOutOfRange, NegativeInput, ShapeMismatch

#: Entries below this value are raised to it before any scaling iteration;
#: exact zeros would divide by zero in Sinkhorn updates.
MASS_FLOOR = 1e-12

#: Tolerance for "sums to one" checks on measures.
SUM_TOL = 1e-9


@dataclass(frozen=True)
class GridShape:
    """Dimensions of a pixel grid."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.rows}x{self.cols}")

    @property
    def n(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class GridMeasure:
    """A probability distribution over the pixels of a grid.

    ``mass`` is a length-``shape.n`` vector in row-major pixel order with
    non-negative entries summing to one (within ``SUM_TOL``).
    """

    shape: GridShape
    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size != self.shape.n:
            raise ShapeMismatch(
                f"mass has length {mass.size}, expected {self.shape.n} for {self.shape}"
            )
        if np.any(mass < 0):
            raise NegativeInput("measure entries must be non-negative")
        total = float(mass.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"measure sums to {total!r}, expected 1 within {SUM_TOL}")
        mass = mass.copy()
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    def as_image(self) -> np.ndarray:
        """Return the mass vector reshaped to (rows, cols)."""
        return self.mass.reshape(self.shape.rows, self.shape.cols)


@dataclass(frozen=True)
class GroundCost:
    """Squared-Euclidean ground cost on a grid plus the entropic weight.

    The cost rule is implicit: pixel coordinates are normalized per axis to
    [0, 1] (a 1-pixel axis maps to coordinate 0) and the cost between pixels
    is the squared Euclidean distance of their normalized coordinates.
    """

    shape: GridShape
    epsilon: float

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def axis_coordinates(length: int) -> np.ndarray:
    """Normalized coordinates of pixel centers along one axis."""
    if length == 1:
        return np.zeros(1)
    return np.arange(length, dtype=np.float64) / (length - 1)


def axis_cost_matrix(length: int) -> np.ndarray:
    """Pairwise squared distances of normalized coordinates along one axis."""
    t = axis_coordinates(length)
    return (t[:, None] - t[None, :]) ** 2


def normalize_to_measure(pixels: np.ndarray, shape: GridShape) -> GridMeasure:
    """Turn raw non-negative pixel intensities into a grid measure.

    Entries below ``MASS_FLOOR`` are raised to it (zero-mass pixels break
    the scaling iterations downstream) and the result is rescaled to sum
    to one.

    Raises:
        AllZeroInput: if every entry is zero.
        NegativeInput: if any entry is below ``-SUM_TOL``.
        ShapeMismatch: if the pixel count does not match the grid.
    """
    pixels = np.asarray(pixels, dtype=np.float64).ravel()
    if pixels.size != shape.n:
        raise ShapeMismatch(f"{pixels.size} pixels for {shape.rows}x{shape.cols} grid")
    if np.any(pixels < -SUM_TOL):
        raise NegativeInput("pixel intensities must be non-negative")
    pixels = np.maximum(pixels, 0.0)
    if not np.any(pixels > 0):
        raise AllZeroInput("cannot normalize an all-zero image")
    mass = np.maximum(pixels, MASS_FLOOR)
    mass = mass / mass.sum()
    return GridMeasure(shape, mass)


def cost_between(cost: GroundCost, i: int, j: int) -> float:
    """Ground cost between pixels ``i`` and ``j`` (row-major indices)."""
    n = cost.shape.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"pixel indices ({i}, {j}) outside grid of {n} pixels")
    rows, cols = cost.shape.rows, cost.shape.cols
    ri, ci = divmod(i, cols)
    rj, cj = divmod(j, cols)
    dr = (ri - rj) / (rows - 1) if rows > 1 else 0.0
    dc = (ci - cj) / (cols - 1) if cols > 1 else 0.0
    return dr * dr + dc * dc


def require_same_shape(*measures: GridMeasure) -> GridShape:
    """Return the common shape of the given measures or raise ShapeMismatch."""
    shape = measures[0].shape
    for m in measures[1:]:
        if m.shape != shape:
            raise ShapeMismatch(f"measures on different grids: {shape} vs {m.shape}")
    return shape


def floored_image(measure: GridMeasure) -> np.ndarray:
    """Mass as a (rows, cols) array floored at ``MASS_FLOOR`` and renormalized."""
    img = np.maximum(measure.as_image(), MASS_FLOOR)
    return img / img.sum()
