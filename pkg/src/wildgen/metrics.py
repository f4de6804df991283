"""Similarity metrics between real and generated trajectory sets.

Two complementary views: Hausdorff distances treat each trajectory as a
point set and measure worst-case geometric deviation from its nearest
real counterpart; cluster occupancy correlation pools all daily
positions, partitions the real ones with k-means, and compares how the
two sets populate those spatial cells (Pearson r of the count vectors).
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .validation import (
    as_float_array,
    check_points,
    check_random_state,
    check_trajectory_stack,
)


def _coords(trajectories, name):
    arr = getattr(trajectories, "coords", trajectories)
    return check_trajectory_stack(arr, name)


def _check_matrix(X, name="X", allow_empty=False):
    arr = as_float_array(X, name)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-d sample matrix, got shape {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return arr


def hausdorff_directed(a, b):
    """max over points of a of the distance to the nearest point of b."""
    A = check_points(a, "a")
    B = check_points(b, "b")
    d = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2))
    return float(d.min(axis=1).max())


def hausdorff(a, b):
    """Symmetric Hausdorff distance between two point sets."""
    return max(hausdorff_directed(a, b), hausdorff_directed(b, a))


@dataclass
class NearestRealSummary:
    """Per-generated-trajectory distance to its closest real trajectory."""

    distances: np.ndarray
    minimum: float
    maximum: float
    mean: float


def nearest_real_summary(generated, real):
    """For each generated trajectory, the Hausdorff distance to the
    closest real one; summarised as (min, max, avg)."""
    gen = _coords(generated, "generated")
    ref = _coords(real, "real")
    dists = np.empty(len(gen))
    for i, traj in enumerate(gen):
        dists[i] = min(hausdorff(traj, r) for r in ref)
    return NearestRealSummary(
        distances=dists,
        minimum=float(dists.min()),
        maximum=float(dists.max()),
        mean=float(dists.mean()),
    )


class KMeans(BaseEstimator):
    """Lloyd's algorithm with greedy farthest-point seeding.

    The first centroid is a uniformly drawn data point; each further seed
    is the point farthest from its nearest chosen centroid (first index
    wins ties).  Iteration stops when labels stop changing.  The
    distortion after every assignment step is kept in inertia_path_,
    which is non-increasing.
    """

    def __init__(self, n_clusters=13, max_iter=100, random_state=0):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state

    def _init_centroids(self, X, rng):
        n = len(X)
        centroids = np.empty((self.n_clusters, X.shape[1]))
        centroids[0] = X[int(rng.integers(n))]
        d2 = ((X - centroids[0]) ** 2).sum(axis=1)
        for j in range(1, self.n_clusters):
            centroids[j] = X[int(np.argmax(d2))]
            d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
        return centroids

    def fit(self, X, y=None):
        X = _check_matrix(X, "X")
        n = len(X)
        if self.n_clusters < 1:
            raise ValueError(f"n_clusters must be positive, got {self.n_clusters}")
        if self.n_clusters > n:
            raise ValueError(f"n_clusters {self.n_clusters} exceeds number of points {n}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        rng = check_random_state(self.random_state)
        centroids = self._init_centroids(X, rng)
        path = []
        prev = None
        for it in range(self.max_iter):
            d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            labels = np.argmin(d2, axis=1)
            path.append(float(d2[np.arange(n), labels].sum()))
            if prev is not None and np.array_equal(labels, prev):
                break
            prev = labels
            for j in range(self.n_clusters):
                members = X[labels == j]
                if len(members):
                    centroids[j] = members.mean(axis=0)
        self.cluster_centers_ = centroids
        self.labels_ = labels
        self.inertia_ = path[-1]
        self.inertia_path_ = np.array(path)
        self.n_iter_ = len(path)
        return self

    def predict(self, X):
        if not hasattr(self, "cluster_centers_"):
            raise ValueError("KMeans is not fitted; call fit() first")
        X = _check_matrix(X, "X", allow_empty=True)
        if len(X) == 0:
            return np.empty(0, dtype=int)
        d2 = ((X[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


def silhouette_score(X, labels):
    """Mean silhouette over all points; singleton clusters score zero."""
    X = _check_matrix(X, "X")
    labels = np.asarray(labels)
    if len(labels) != len(X):
        raise ValueError("labels length must match X")
    unique = np.unique(labels)
    if len(unique) < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(len(X))
    masks = {c: labels == c for c in unique}
    sizes = {c: int(masks[c].sum()) for c in unique}
    for i in range(len(X)):
        own = labels[i]
        if sizes[own] == 1:
            continue
        a = d[i, masks[own]].sum() / (sizes[own] - 1)
        b = min(d[i, masks[c]].mean() for c in unique if c != own)
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


@dataclass
class ChooseKResult:
    k: int
    candidates: np.ndarray
    silhouettes: np.ndarray
    distortions: np.ndarray


def choose_k(X, k_min=10, k_max=15, random_state=0, max_iter=100):
    """Pick the cluster count with the best silhouette (ties: smaller k)."""
    X = _check_matrix(X, "X")
    if k_min < 2 or k_max < k_min:
        raise ValueError(f"need 2 <= k_min <= k_max, got {k_min}..{k_max}")
    candidates = np.arange(k_min, k_max + 1)
    sils = np.empty(len(candidates))
    dists = np.empty(len(candidates))
    for i, k in enumerate(candidates):
        model = KMeans(n_clusters=int(k), max_iter=max_iter, random_state=random_state).fit(X)
        sils[i] = silhouette_score(X, model.labels_)
        dists[i] = model.inertia_
    best = int(np.argmax(sils))
    return ChooseKResult(
        k=int(candidates[best]),
        candidates=candidates,
        silhouettes=sils,
        distortions=dists,
    )


def cluster_histogram(model, points):
    """Counts of points per cluster of a fitted KMeans, length n_clusters."""
    labels = model.predict(points)
    return np.bincount(labels, minlength=model.n_clusters)


def pearson(x, y):
    """Pearson correlation coefficient of two equal-length sequences."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"x and y must be equal-length vectors, got {x.shape} and {y.shape}")
    n = len(x)
    if n < 2:
        raise ValueError("pearson needs at least 2 samples")
    sx = x.sum()
    sy = y.sum()
    sxx = (x * x).sum()
    syy = (y * y).sum()
    sxy = (x * y).sum()
    var_x = n * sxx - sx * sx
    var_y = n * syy - sy * sy
    if var_x <= 0 or var_y <= 0:
        raise ValueError("zero variance input to correlation")
    r = (n * sxy - sx * sy) / np.sqrt(var_x * var_y)
    return float(np.clip(r, -1.0, 1.0))


@dataclass
class MetricsReport:
    """Evaluation summary for a generated set against the real corpus."""

    hausdorff_min: float
    hausdorff_max: float
    hausdorff_avg: float
    pearson_r: float
    k: int
    cluster_counts_real: list = field(default_factory=list)
    cluster_counts_generated: list = field(default_factory=list)

    def to_dict(self):
        return {
            "hausdorff_min": self.hausdorff_min,
            "hausdorff_max": self.hausdorff_max,
            "hausdorff_avg": self.hausdorff_avg,
            "pearson_r": self.pearson_r,
            "k": self.k,
            "cluster_counts_real": [int(c) for c in self.cluster_counts_real],
            "cluster_counts_generated": [int(c) for c in self.cluster_counts_generated],
        }


def evaluate(real, generated, k=13, random_state=0):
    """Score a generated set against the real corpus.

    The generated set is truncated to the real set's size so both
    histograms pool the same number of points; k-means cells are learned
    from the real points only.
    """
    real_coords = _coords(real, "real")
    gen_coords = _coords(generated, "generated")
    if real_coords.shape[1] != gen_coords.shape[1]:
        raise ValueError(
            f"horizon mismatch: real has {real_coords.shape[1]} days, "
            f"generated has {gen_coords.shape[1]}"
        )
    n = len(real_coords)
    if len(gen_coords) < n:
        raise ValueError(
            f"not enough generated trajectories: need {n}, got {len(gen_coords)}"
        )
    gen_coords = gen_coords[:n]
    summary = nearest_real_summary(gen_coords, real_coords)
    model = KMeans(n_clusters=k, random_state=random_state).fit(real_coords.reshape(-1, 2))
    counts_real = cluster_histogram(model, real_coords.reshape(-1, 2))
    counts_gen = cluster_histogram(model, gen_coords.reshape(-1, 2))
    r = pearson(counts_real, counts_gen)
    return MetricsReport(
        hausdorff_min=summary.minimum,
        hausdorff_max=summary.maximum,
        hausdorff_avg=summary.mean,
        pearson_r=r,
        k=k,
        cluster_counts_real=[int(c) for c in counts_real],
        cluster_counts_generated=[int(c) for c in counts_gen],
    )
