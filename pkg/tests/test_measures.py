"""Grid geometry, measure construction, and cost-matrix contracts."""

import numpy as np
import pytest

from otmorph import (
    AllZeroInput,
    GridMeasure,
    GridShape,
    GroundCost,
    NegativeInput,
    ShapeMismatch,
    axis_coordinates,
    cost_between,
    normalize_to_measure,
)
from otmorph.measures import MASS_FLOOR, floored_image, require_same_shape


class TestGridShape:
    def test_pixel_count(self):
        assert GridShape(28, 28).n == 784
        assert GridShape(1, 16).n == 16

    @pytest.mark.parametrize("rows,cols", [(0, 4), (4, 0), (-1, 4)])
    def test_rejects_nonpositive(self, rows, cols):
        with pytest.raises(ValueError):
            GridShape(rows, cols)


class TestAxisCoordinates:
    def test_unit_interval_endpoints(self):
        x = axis_coordinates(5)
        assert x[0] == 0.0
        assert x[-1] == 1.0
        np.testing.assert_allclose(np.diff(x), 0.25)

    def test_single_pixel_axis_is_zero(self):
        np.testing.assert_array_equal(axis_coordinates(1), [0.0])


class TestCost:
    def test_cost_between_corner_pixels(self):
        cost = GroundCost(GridShape(4, 4), 1e-2)
        # opposite corners of the unit square
        assert cost_between(cost, 0, cost.shape.n - 1) == pytest.approx(2.0)
        assert cost_between(cost, 0, 0) == 0.0

    def test_cost_is_separable_sum(self):
        shape = GridShape(3, 5)
        cost = GroundCost(shape, 1e-2)
        i, j = 7, 12
        ri, ci = divmod(i, shape.cols)
        rj, cj = divmod(j, shape.cols)
        expected = ((ri - rj) / 2) ** 2 + ((ci - cj) / 4) ** 2
        assert cost_between(cost, i, j) == pytest.approx(expected)

    def test_ground_cost_epsilon_positive(self):
        with pytest.raises(ValueError):
            GroundCost(GridShape(2, 2), 0.0)


class TestNormalize:
    def test_sums_to_one(self):
        img = np.arange(12, dtype=float).reshape(3, 4)
        m = normalize_to_measure(img, GridShape(3, 4))
        assert m.mass.sum() == pytest.approx(1.0, abs=1e-12)
        assert m.mass.shape == (12,)

    def test_preserves_proportions(self):
        img = np.array([[1.0, 3.0]])
        m = normalize_to_measure(img, GridShape(1, 2))
        np.testing.assert_allclose(m.mass, [0.25, 0.75])

    def test_all_zero_raises(self):
        with pytest.raises(AllZeroInput):
            normalize_to_measure(np.zeros((2, 2)), GridShape(2, 2))

    def test_negative_raises(self):
        img = np.ones((2, 2))
        img[0, 0] = -0.5
        with pytest.raises(NegativeInput):
            normalize_to_measure(img, GridShape(2, 2))

    def test_flat_vector_accepted(self):
        m = normalize_to_measure(np.ones(6), GridShape(2, 3))
        np.testing.assert_allclose(m.mass, 1 / 6)

    def test_wrong_size_raises(self):
        with pytest.raises(ShapeMismatch):
            normalize_to_measure(np.ones(5), GridShape(2, 3))


class TestGridMeasure:
    def test_as_image_round_trip(self):
        img = np.array([[0.1, 0.2], [0.3, 0.4]])
        m = normalize_to_measure(img, GridShape(2, 2))
        np.testing.assert_allclose(m.as_image(), img)

    def test_mass_is_read_only(self):
        m = normalize_to_measure(np.ones(4), GridShape(2, 2))
        with pytest.raises(ValueError):
            m.mass[0] = 2.0

    def test_require_same_shape(self):
        a = normalize_to_measure(np.ones(4), GridShape(2, 2))
        b = normalize_to_measure(np.ones(4), GridShape(1, 4))
        with pytest.raises(ShapeMismatch):
            require_same_shape(a, b)


class TestFlooredImage:
    def test_floor_applied_then_renormalized(self):
        m = normalize_to_measure(np.array([1.0, 0.0, 0.0, 3.0]), GridShape(2, 2))
        floored = floored_image(m)
        assert floored.min() >= MASS_FLOOR * (1 - 1e-9)
        assert floored.sum() == pytest.approx(1.0, abs=1e-12)
