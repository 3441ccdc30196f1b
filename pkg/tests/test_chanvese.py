import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdmark import (
    ChanVeseParams,
    DegenerateRegionError,
    IntensityGrid,
    ParameterError,
    RegionMask,
    boundary_pixels,
    chan_vese_segment,
    energy,
    init_region,
    roi_window,
)
from crowdmark.chanvese import boundary_length, full_window
from conftest import iou, rasterize_disk_oracle


def disk_grid(center, radius, size, disk=0.9, background=0.2, noise=0.0, seed=0):
    w, h = size
    values = np.full((h, w), background)
    mask = rasterize_disk_oracle(center, radius, size)
    values[mask] = disk
    if noise:
        rng = np.random.default_rng(seed)
        values = np.clip(values + rng.uniform(-noise, noise, values.shape), 0, 1)
    return IntensityGrid(values), mask


class TestParams:
    def test_defaults(self):
        p = ChanVeseParams()
        assert (p.lambda1, p.lambda2, p.mu, p.nu) == (1.0, 1.0, 0.0, 0.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"lambda1": 0.0},
            {"lambda2": -1.0},
            {"mu": -0.5},
            {"nu": float("inf")},
            {"max_iterations": 0},
            {"convergence_patience": 0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ParameterError):
            ChanVeseParams(**kwargs)


class TestRoiWindow:
    def test_interior(self, flat_grid):
        w = roi_window((50.0, 50.0), 10.0, flat_grid)
        assert (w.x0, w.x1, w.y0, w.y1) == (40, 60, 40, 60)
        assert w.half_width == 10

    def test_minimum_half_width(self, flat_grid):
        assert roi_window((50.0, 50.0), 1.2, flat_grid).half_width == 3

    def test_half_rounds_down(self, flat_grid):
        assert roi_window((50.0, 50.0), 4.5, flat_grid).half_width == 4
        assert roi_window((50.0, 50.0), 4.6, flat_grid).half_width == 5

    def test_clipped_at_border(self, flat_grid):
        w = roi_window((1.0, 62.0), 8.0, flat_grid)
        assert (w.x0, w.x1, w.y0, w.y1) == (0, 9, 54, 63)

    def test_requires_positive_distance(self, flat_grid):
        with pytest.raises(ParameterError):
            roi_window((5.0, 5.0), 0.0, flat_grid)


class TestInitRegion:
    def test_interior_box(self, flat_grid):
        m = init_region((32.0, 32.0), flat_grid)
        ys, xs = np.nonzero(m.inside)
        assert (xs.min(), xs.max(), ys.min(), ys.max()) == (30, 34, 30, 34)
        assert m.pixel_count() == 25

    def test_corner_clip(self, flat_grid):
        m = init_region((0.0, 0.0), flat_grid)
        ys, xs = np.nonzero(m.inside)
        assert (xs.max(), ys.max()) == (2, 2)
        assert m.pixel_count() == 9

    def test_subpixel_head_near_edge(self, flat_grid):
        m = init_region((63.4, 0.0), flat_grid)
        ys, xs = np.nonzero(m.inside)
        assert (xs.min(), xs.max(), ys.min(), ys.max()) == (61, 63, 0, 2)

    def test_respects_window(self, flat_grid):
        w = roi_window((10.0, 10.0), 4.0, flat_grid)
        m = init_region((10.0, 10.0), flat_grid, window=w)
        assert m.inside.shape == (w.height, w.width)
        assert m.pixel_count() == 25

    def test_head_outside_window_rejected(self, flat_grid):
        w = roi_window((10.0, 10.0), 4.0, flat_grid)
        with pytest.raises(ParameterError):
            init_region((40.0, 40.0), flat_grid, window=w)


class TestRegionMask:
    def test_empty_rejected(self, flat_grid):
        w = roi_window((10.0, 10.0), 4.0, flat_grid)
        with pytest.raises(DegenerateRegionError):
            RegionMask(window=w, inside=np.zeros((w.height, w.width), dtype=bool))

    def test_shape_checked(self, flat_grid):
        w = roi_window((10.0, 10.0), 4.0, flat_grid)
        with pytest.raises(ParameterError):
            RegionMask(window=w, inside=np.ones((3, 3), dtype=bool))


class TestEnergy:
    def test_full_mask_single_bright_pixel(self):
        u = np.zeros((3, 3))
        u[1, 1] = 1.0
        grid = IntensityGrid(u)
        mask = RegionMask(window=full_window(grid), inside=np.ones((3, 3), dtype=bool))
        assert energy(grid, mask, ChanVeseParams()) == pytest.approx(72 / 81, abs=1e-12)

    def test_two_region_split_is_zero(self):
        u = np.zeros((4, 4))
        u[:, 2:] = 1.0
        grid = IntensityGrid(u)
        inside = np.zeros((4, 4), dtype=bool)
        inside[:, 2:] = True
        mask = RegionMask(window=full_window(grid), inside=inside)
        assert energy(grid, mask, ChanVeseParams()) == 0.0

    def test_area_term(self):
        u = np.zeros((3, 3))
        grid = IntensityGrid(u)
        inside = np.zeros((3, 3), dtype=bool)
        inside[1, 1] = True
        mask = RegionMask(window=full_window(grid), inside=inside)
        assert energy(grid, mask, ChanVeseParams(nu=2.0)) == pytest.approx(2.0)

    def test_boundary_term_counts_window_border(self):
        grid = IntensityGrid(np.zeros((3, 3)))
        full = RegionMask(window=full_window(grid), inside=np.ones((3, 3), dtype=bool))
        # 3x3 block: every border edge of the window counts, perimeter 12
        assert boundary_length(full.inside) == 12
        single = np.zeros((3, 3), dtype=bool)
        single[1, 1] = True
        assert boundary_length(single) == 4
        assert energy(grid, RegionMask(window=full_window(grid), inside=single),
                      ChanVeseParams(mu=0.5)) == pytest.approx(2.0)


class TestSegmentation:
    def test_uniform_window_keeps_seed(self, flat_grid):
        w = roi_window((20.0, 20.0), 8.0, flat_grid)
        seed = init_region((20.0, 20.0), flat_grid, window=w)
        res = chan_vese_segment(flat_grid, w, seed, ChanVeseParams())
        assert res.converged
        assert np.array_equal(res.mask.inside, seed.inside)
        assert res.iterations_run <= ChanVeseParams().convergence_patience

    def test_recovers_noiseless_disk_exactly(self):
        grid, oracle = disk_grid((20.0, 20.0), 8.0, (41, 41))
        w = full_window(grid)
        seed = init_region((20.0, 20.0), grid, window=w)
        res = chan_vese_segment(grid, w, seed)
        assert res.converged
        assert iou(res.mask.inside, oracle) == 1.0
        assert res.c1 == pytest.approx(0.9)
        assert res.c2 == pytest.approx(0.2)

    def test_two_means_converge_fast_on_clean_input(self):
        grid, _ = disk_grid((15.0, 15.0), 6.0, (31, 31))
        w = full_window(grid)
        seed = init_region((15.0, 15.0), grid, window=w)
        res = chan_vese_segment(grid, w, seed)
        p = ChanVeseParams()
        assert res.iterations_run <= 2 + p.convergence_patience

    def test_noisy_disk_high_overlap(self):
        grid, oracle = disk_grid((20.0, 20.0), 8.0, (41, 41), noise=0.1, seed=4)
        w = full_window(grid)
        seed = init_region((20.0, 20.0), grid, window=w)
        res = chan_vese_segment(grid, w, seed)
        assert iou(res.mask.inside, oracle) >= 0.8

    def test_window_mismatch_rejected(self, flat_grid):
        w1 = roi_window((20.0, 20.0), 8.0, flat_grid)
        w2 = roi_window((30.0, 30.0), 8.0, flat_grid)
        seed = init_region((20.0, 20.0), flat_grid, window=w1)
        with pytest.raises(ParameterError):
            chan_vese_segment(flat_grid, w2, seed)

    def test_collapse_falls_back_to_center_pixel(self):
        # huge nu makes every pixel prefer outside; mask must not go empty
        grid, _ = disk_grid((10.0, 10.0), 4.0, (21, 21))
        w = full_window(grid)
        seed = init_region((10.0, 10.0), grid, window=w)
        res = chan_vese_segment(grid, w, seed, ChanVeseParams(nu=100.0))
        assert res.mask.pixel_count() == 1
        assert not res.converged
        assert res.mask.inside[w.center[1], w.center[0]]

    def test_iteration_cap(self):
        grid, _ = disk_grid((20.0, 20.0), 8.0, (41, 41), noise=0.1, seed=2)
        w = full_window(grid)
        seed = init_region((20.0, 20.0), grid, window=w)
        res = chan_vese_segment(grid, w, seed, ChanVeseParams(max_iterations=1))
        assert res.iterations_run == 1
        assert not res.converged

    def test_final_energy_matches_energy_function(self):
        grid, _ = disk_grid((20.0, 20.0), 7.0, (41, 41), noise=0.08, seed=6)
        w = full_window(grid)
        seed = init_region((20.0, 20.0), grid, window=w)
        params = ChanVeseParams(mu=0.1, nu=0.01)
        res = chan_vese_segment(grid, w, seed, params)
        assert res.final_energy == pytest.approx(
            energy(grid, res.mask, params), abs=1e-12
        )

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_energy_never_increases(self, seed):
        rng = np.random.default_rng(seed)
        size = int(rng.integers(9, 25))
        grid = IntensityGrid(rng.uniform(0, 1, size=(size, size)))
        w = full_window(grid)
        cx = float(rng.uniform(2, size - 3))
        cy = float(rng.uniform(2, size - 3))
        seed_mask = init_region((cx, cy), grid, window=w)
        res = chan_vese_segment(grid, w, seed_mask, trace_energy=True)
        trace = res.energy_trace
        assert trace is not None and len(trace) >= 1
        for earlier, later in zip(trace, trace[1:]):
            assert later <= earlier + 1e-9
        assert res.final_energy == pytest.approx(trace[-1], abs=1e-9)


class TestBoundaryPixels:
    def test_full_block_ring(self):
        grid = IntensityGrid(np.zeros((5, 5)))
        w = full_window(grid)
        inside = np.zeros((5, 5), dtype=bool)
        inside[1:4, 1:4] = True
        bp = boundary_pixels(RegionMask(window=w, inside=inside))
        got = {tuple(p) for p in bp}
        want = {(x, y) for x in range(1, 4) for y in range(1, 4)} - {(2, 2)}
        assert got == want

    def test_coordinates_are_absolute(self, flat_grid):
        w = roi_window((20.0, 20.0), 5.0, flat_grid)
        m = init_region((20.0, 20.0), flat_grid, window=w)
        bp = boundary_pixels(m)
        xs = bp[:, 0]
        ys = bp[:, 1]
        assert xs.min() == 18 and xs.max() == 22
        assert ys.min() == 18 and ys.max() == 22

    def test_single_pixel_is_its_own_boundary(self, flat_grid):
        w = roi_window((5.0, 5.0), 3.0, flat_grid)
        inside = np.zeros((w.height, w.width), dtype=bool)
        inside[3, 3] = True
        bp = boundary_pixels(RegionMask(window=w, inside=inside))
        assert bp.tolist() == [[5, 5]]
