"""Tests for smoothing coefficients, the convex hull, and region filtering."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wildgen.postprocess import (
    ConvexRegionFilter,
    SavitzkyGolaySmoother,
    convex_hull,
    point_in_convex_region,
    region_from_geojson,
    region_to_geojson,
    savgol_coefficients,
)


def least_squares_center_value(window_length, polyorder):
    """Oracle: weight of each sample in the polynomial fit's center value.

    Fits a degree-``polyorder`` polynomial through a unit impulse at each
    window position and reads off the fitted value at the center.
    """
    half = window_length // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    weights = np.empty(window_length)
    for i in range(window_length):
        impulse = np.zeros(window_length)
        impulse[i] = 1.0
        coeffs = np.polyfit(offsets, impulse, polyorder)
        weights[i] = np.polyval(coeffs, 0.0)
    return weights


class TestSavgolCoefficients:
    def test_window5_order2_classical_values(self):
        expected = np.array([-3.0, 12.0, 17.0, 12.0, -3.0]) / 35.0
        got = savgol_coefficients(5, 2)
        assert np.allclose(got, expected, atol=1e-12)
        assert np.allclose(got, least_squares_center_value(5, 2), atol=1e-12)

    @pytest.mark.parametrize("window,order", [(5, 2), (7, 3), (9, 2), (11, 4), (21, 3)])
    def test_matches_least_squares_oracle(self, window, order):
        got = savgol_coefficients(window, order)
        assert np.allclose(got, least_squares_center_value(window, order), atol=1e-10)

    @pytest.mark.parametrize("window,order", [(3, 1), (3, 0)])
    def test_window3_low_order_is_moving_average(self, window, order):
        assert np.allclose(savgol_coefficients(window, order), np.ones(3) / 3.0)

    def test_weights_sum_to_one(self):
        for window, order in [(5, 0), (7, 2), (13, 5), (21, 3)]:
            assert savgol_coefficients(window, order).sum() == pytest.approx(1.0)

    def test_symmetry(self):
        c = savgol_coefficients(9, 3)
        assert np.allclose(c, c[::-1])

    def test_even_window_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            savgol_coefficients(4, 2)

    def test_window_too_small_for_order(self):
        with pytest.raises(ValueError, match="too small"):
            savgol_coefficients(5, 4)

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError, match="polyorder"):
            savgol_coefficients(5, -1)


class TestSmoother:
    @given(
        order=st.integers(min_value=0, max_value=4),
        extra=st.integers(min_value=0, max_value=6),
        data=st.data(),
    )
    @settings(max_examples=40, deadline=None)
    def test_polynomials_pass_through_unchanged(self, order, extra, data):
        window = order + 2 + (order % 2 == 0)  # smallest odd window
        window += 2 * extra
        m = window + data.draw(st.integers(min_value=5, max_value=20))
        coeffs = data.draw(
            st.lists(
                st.floats(min_value=-2.0, max_value=2.0),
                min_size=order + 1,
                max_size=order + 1,
            )
        )
        x = np.linspace(-1.0, 1.0, m)
        values = np.polyval(coeffs, x)
        traj = np.column_stack([values, values[::-1]])
        smoothed = SavitzkyGolaySmoother(window, order).fit().transform(traj)
        half = window // 2
        interior = slice(half, m - half)
        assert np.allclose(smoothed[interior], traj[interior], atol=1e-9)

    def test_stack_and_single_agree(self, rng):
        stack = rng.standard_normal((4, 30, 2))
        sm = SavitzkyGolaySmoother(7, 2)
        all_at_once = sm.transform(stack)
        one = sm.transform(stack[2])
        assert np.array_equal(all_at_once[2], one)

    def test_reduces_noise_path_length(self, rng):
        base = np.column_stack([np.linspace(0, 10, 60), np.linspace(0, 5, 60)])
        noisy = base + rng.standard_normal((60, 2)) * 0.5

        def path_length(t):
            return np.hypot(*np.diff(t, axis=0).T).sum()

        smoothed = SavitzkyGolaySmoother(11, 3).transform(noisy)
        assert path_length(smoothed) < path_length(noisy)

    def test_too_short_trajectory(self):
        with pytest.raises(ValueError, match="shorter than window"):
            SavitzkyGolaySmoother(21, 3).transform(np.zeros((10, 2)))

    def test_output_shape_matches_input(self, rng):
        stack = rng.standard_normal((3, 25, 2))
        assert SavitzkyGolaySmoother(5, 2).transform(stack).shape == stack.shape


class TestConvexHull:
    def test_square_with_interior_points(self):
        pts = np.array(
            [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.2, 0.8]]
        )
        hull = convex_hull(pts)
        assert len(hull) == 4
        assert {tuple(v) for v in hull} == {(0, 0), (1, 0), (1, 1), (0, 1)}

    def test_counter_clockwise_strictly_convex(self):
        rng = np.random.default_rng(2)
        hull = convex_hull(rng.standard_normal((50, 2)))
        n = len(hull)
        for i in range(n):
            o, a, b = hull[i], hull[(i + 1) % n], hull[(i + 2) % n]
            cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
            assert cross > 0.0

    def test_collinear_edge_points_dropped(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        hull = convex_hull(pts)
        assert len(hull) == 3

    def test_duplicates_ignored(self):
        pts = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0], [0.0, 1.0]])
        assert len(convex_hull(pts)) == 3

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError, match="degenerate hull"):
            convex_hull(np.array([[0.0, 0.0], [1.0, 1.0]]))
        with pytest.raises(ValueError, match="degenerate hull"):
            convex_hull(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))

    @given(
        st.lists(
            st.tuples(st.integers(-50, 50), st.integers(-50, 50)),
            min_size=3,
            max_size=40,
            unique=True,
        )
    )
    @settings(max_examples=80, deadline=None)
    def test_hull_contains_all_generators(self, raw):
        pts = np.array(raw, dtype=float)
        try:
            hull = convex_hull(pts)
        except ValueError:
            return  # all collinear: correctly rejected
        inside = point_in_convex_region(hull, pts, tol=1e-9)
        assert inside.all()
        hull_set = {tuple(v) for v in hull}
        assert hull_set <= {tuple(p) for p in pts}


class TestContainment:
    def test_boundary_is_inside(self):
        hull = convex_hull(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]))
        queries = np.array([[1.0, 0.0], [0.0, 0.0], [2.0, 1.0], [1.0, 1.0]])
        assert point_in_convex_region(hull, queries).all()

    def test_outside_excluded(self):
        hull = convex_hull(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]))
        outside = np.array([[3.0, 1.0], [-0.1, 0.0], [1.0, 2.1]])
        assert not point_in_convex_region(hull, outside).any()

    def test_filter_counts_discards(self):
        region = ConvexRegionFilter().fit(
            np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]])
        )
        inside = np.full((3, 5, 2), 2.0)
        outside = np.full((1, 5, 2), 9.0)
        partially = np.full((1, 5, 2), 2.0)
        partially[0, 3] = (9.0, 9.0)
        stack = np.concatenate([inside, outside, partially])
        kept, discarded = region.filter(stack)
        assert discarded == 2
        assert len(kept) == 3

    def test_real_points_never_discarded(self, small_corpus):
        region = ConvexRegionFilter().fit(small_corpus.points)
        kept, discarded = region.filter(small_corpus.coords)
        assert discarded == 0
        assert np.array_equal(kept, small_corpus.coords)


class TestGeojsonRegion:
    def test_round_trip(self):
        hull = convex_hull(np.array([[0.0, 0.0], [3.0, 0.0], [1.0, 2.0]]))
        obj = region_to_geojson(hull)
        assert obj["type"] == "Polygon"
        ring = obj["coordinates"][0]
        assert ring[0] == ring[-1]  # closed ring
        back = region_from_geojson(obj)
        assert np.allclose(back, hull)
