"""Trajectory post-processing: smoothing and spatial plausibility filtering.

Savitzky-Golay smoothing replaces each point by the value at the window
center of the least-squares polynomial fit over the surrounding window.
The filter weights are precomputed: they are the minimum-norm solution of
the polynomial moment conditions, so applying them is a single sliding
dot product.  Boundaries use mirror padding so output length equals
input length.

The plausibility filter builds the convex hull of all observed real
points (the minimum bounding region) and discards generated trajectories
that leave it.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import as_float_array, check_points, check_trajectory_stack


def savgol_coefficients(window_length, polyorder):
    """Symmetric smoothing weights for a least-squares polynomial window.

    window_length must be odd and exceed polyorder + 1.  The weights c_j,
    j = -h..h, satisfy sum_j c_j j^p = [p == 0] for p = 0..polyorder; the
    minimum-norm solution of those moment conditions is exactly the
    classical filter.
    """
    if window_length % 2 != 1:
        raise ValueError(f"window_length must be odd, got {window_length}")
    if polyorder < 0:
        raise ValueError(f"polyorder must be non-negative, got {polyorder}")
    if window_length < polyorder + 2:
        raise ValueError(
            f"window_length {window_length} too small for polyorder {polyorder}"
        )
    half = window_length // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    powers = np.arange(polyorder + 1)
    design = offsets[:, None] ** powers[None, :]
    target = np.zeros(polyorder + 1)
    target[0] = 1.0
    coeffs, *_ = np.linalg.lstsq(design.T, target, rcond=None)
    return coeffs


def _smooth_columns(values, coeffs):
    half = len(coeffs) // 2
    padded = np.pad(values, ((half, half), (0, 0)), mode="reflect")
    out = np.empty_like(values)
    for d in range(values.shape[1]):
        out[:, d] = np.correlate(padded[:, d], coeffs, mode="valid")
    return out


class SavitzkyGolaySmoother(BaseEstimator, TransformerMixin):
    """Sliding least-squares polynomial smoother for trajectories.

    Parameters
    ----------
    window_length : odd window size in days.
    polyorder : degree of the fitted polynomial, < window_length - 1.
    """

    def __init__(self, window_length=21, polyorder=3):
        self.window_length = window_length
        self.polyorder = polyorder

    def fit(self, X=None, y=None):
        self.coefficients_ = savgol_coefficients(self.window_length, self.polyorder)
        return self

    def transform(self, X):
        """Smooth one (m, 2) trajectory or an (n, m, 2) stack."""
        if not hasattr(self, "coefficients_"):
            self.fit()
        arr = as_float_array(X, "trajectories")
        single = arr.ndim == 2
        if single:
            arr = arr[None, ...]
        arr = check_trajectory_stack(arr)
        if arr.shape[1] < self.window_length:
            raise ValueError(
                f"trajectory length {arr.shape[1]} shorter than window "
                f"{self.window_length}"
            )
        out = np.empty_like(arr)
        for i in range(arr.shape[0]):
            out[i] = _smooth_columns(arr[i], self.coefficients_)
        return out[0] if single else out


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points):
    """Convex hull vertices in counter-clockwise order (monotone chain).

    Collinear boundary points are dropped, so the hull is strictly
    convex.  Fewer than 3 distinct non-collinear points raise an error.
    """
    pts = check_points(points, "points")
    unique = np.unique(pts, axis=0)
    if len(unique) < 3:
        raise ValueError("degenerate hull: fewer than 3 distinct points")
    pts_list = [tuple(p) for p in unique]

    def half(chain_points):
        chain = []
        for p in chain_points:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts_list)
    upper = half(reversed(pts_list))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise ValueError("degenerate hull: points are collinear")
    return np.array(hull)


def point_in_convex_region(vertices, points, tol=1e-12):
    """Boundary-inclusive membership test against a CCW convex polygon.

    Returns a boolean array, one entry per point.  A point is inside when
    it is on the left of (or within tol of) every edge.
    """
    verts = check_points(vertices, "vertices")
    pts = check_points(points, "points", allow_empty=True)
    if len(verts) < 3:
        raise ValueError("degenerate hull: fewer than 3 vertices")
    edges = np.roll(verts, -1, axis=0) - verts
    rel = pts[:, None, :] - verts[None, :, :]
    cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= -tol, axis=1)


class ConvexRegionFilter(BaseEstimator):
    """Discard trajectories that leave the convex hull of the real points.

    fit() learns the hull from pooled real positions; filter() keeps the
    trajectories whose every point passes the membership test.
    """

    def __init__(self, tol=1e-12):
        self.tol = tol

    def fit(self, X, y=None):
        self.vertices_ = convex_hull(X)
        return self

    def contains(self, points):
        self._check_fitted()
        return point_in_convex_region(self.vertices_, points, self.tol)

    def filter(self, trajectories):
        """Split an (n, m, 2) stack into (kept, n_discarded)."""
        self._check_fitted()
        coords = check_trajectory_stack(trajectories)
        n, m, _ = coords.shape
        flat_ok = self.contains(coords.reshape(-1, 2))
        mask = flat_ok.reshape(n, m).all(axis=1)
        return coords[mask], int(n - mask.sum())

    def _check_fitted(self):
        if not hasattr(self, "vertices_"):
            raise ValueError("ConvexRegionFilter is not fitted; call fit() first")


def region_to_geojson(vertices):
    """CCW convex region as a GeoJSON Polygon (closed ring)."""
    verts = check_points(vertices, "vertices")
    ring = [[float(lon), float(lat)] for lon, lat in verts]
    ring.append(ring[0])
    return {"type": "Polygon", "coordinates": [ring]}


def region_from_geojson(obj):
    if obj.get("type") != "Polygon" or not obj.get("coordinates"):
        raise ValueError("region GeoJSON must be a Polygon")
    ring = obj["coordinates"][0]
    if len(ring) < 4 or ring[0] != ring[-1]:
        raise ValueError("region ring must be closed")
    return np.array(ring[:-1], dtype=float)
