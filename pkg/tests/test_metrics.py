import math

import numpy as np
import pytest

from crowdmark import (
    DensityMap,
    ParameterError,
    count_error,
    map_mae,
    map_mse,
    spearman,
)


class TestMapMetrics:
    def test_known_values(self):
        a = np.array([[0.0, 0.0, 0.0, 2.0]])
        b = np.zeros((1, 4))
        assert map_mse(a, b) == 1.0
        assert map_mae(a, b) == 0.5

    def test_symmetric(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 1, (5, 5))
        b = rng.uniform(0, 1, (5, 5))
        assert map_mse(a, b) == map_mse(b, a)
        assert map_mae(a, b) == map_mae(b, a)

    def test_identical_maps_are_zero(self):
        a = np.random.default_rng(3).uniform(0, 1, (4, 6))
        assert map_mse(a, a) == 0.0
        assert map_mae(a, a) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            map_mse(np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ParameterError):
            map_mae(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_accepts_density_maps(self):
        d = DensityMap(values=np.full((2, 2), 0.25), method="static", head_count=1)
        assert map_mse(d, np.zeros((2, 2))) == 0.0625


class TestCountError:
    def test_scaled_map(self):
        d = DensityMap(values=np.full((2, 2), 0.5), method="static", head_count=1)
        assert count_error(d, 1) == pytest.approx(1.0, abs=1e-12)

    def test_exact_map(self):
        d = DensityMap(values=np.full((2, 2), 0.25), method="static", head_count=1)
        assert count_error(d, 1) == pytest.approx(0.0, abs=1e-12)

    def test_plain_array(self):
        assert count_error(np.ones((2, 2)), 4) == pytest.approx(0.0, abs=1e-12)


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3, 4], [10, 20, 40, 80]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [8, 4, 2, 1]) == pytest.approx(-1.0)

    def test_hand_computed_case(self):
        # ranks differ by one swap: rho = 1 - 6*(0+1+1)/(3*8) = 0.5
        assert spearman([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]) == pytest.approx(0.5)

    def test_constant_input_is_nan(self):
        assert math.isnan(spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))

    def test_short_input_is_nan(self):
        assert math.isnan(spearman([1.0], [2.0]))

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            spearman([1.0, 2.0], [1.0, 2.0, 3.0])
