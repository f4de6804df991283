"""Classical trajectory generators used as comparison baselines.

Levy walk/flight: step lengths are absolute draws from a Cauchy
distribution fitted to the corpus step lengths (median / half-IQR),
truncated at the corpus's 99.9th-percentile step so a single draw cannot
cross the map, plus normal jitter.  Headings start at zero (due east in
lon/lat axes) and accumulate normal turning angles; the finished path is
rotated counter-clockwise about its start by the azimuth between the
corpus's mean start and mean end points.

Heteroscedastic GPR: one Gaussian process per output dimension over the
day index, fitted to the per-day mean of a seeded 50% subsample of
trajectories.  Observation noise varies by day: g(day) is the empirical
variance across the subsample of the per-day point norms, floored at a
small constant.  Kernel is squared-exponential plus bias, with
hyperparameters chosen by a gradient-free coordinate search on the log
marginal likelihood.  Samples are the posterior mean plus independent
per-day noise with variance g(day).
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky
from sklearn.base import BaseEstimator

from .ingest import TrajectorySet
from .validation import (
    check_fraction,
    check_positive_int,
    check_random_state,
    check_trajectory_stack,
)


def azimuth(start, end):
    """Planar azimuth from start to end: atan2(dlon, dlat), clockwise
    from north, in radians."""
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    if start.shape != (2,) or end.shape != (2,):
        raise ValueError("azimuth expects two (lon, lat) points")
    dlon = end[0] - start[0]
    dlat = end[1] - start[1]
    if dlon == 0.0 and dlat == 0.0:
        raise ValueError("azimuth undefined for identical points")
    return float(np.arctan2(dlon, dlat))


@dataclass(frozen=True)
class LevyParams:
    """Fitted step statistics for the Levy generator (degrees/radians)."""

    step_location: float
    step_scale: float
    angular_sd: float
    linear_sd: float
    alpha_estimate: float
    rotation: float
    step_max: float

    def to_dict(self):
        return asdict(self)


def _turning_angles(coords):
    """Pooled turning angles, skipping zero-length steps."""
    diffs = np.diff(coords, axis=1)
    headings = np.arctan2(diffs[:, :, 1], diffs[:, :, 0])
    lengths = np.hypot(diffs[:, :, 0], diffs[:, :, 1])
    turns = []
    for h, l in zip(headings, lengths):
        ok = l > 0
        for a, b, va, vb in zip(h[:-1], h[1:], ok[:-1], ok[1:]):
            if va and vb:
                turns.append(_wrap_angle(b - a))
    return np.array(turns)


def _wrap_angle(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _circular_sd(angles):
    if len(angles) == 0:
        return 0.0
    resultant = np.abs(np.mean(np.exp(1j * angles)))
    resultant = min(max(resultant, 1e-12), 1.0)
    return float(np.sqrt(max(-2.0 * np.log(resultant), 0.0)))


def _tail_exponent(lengths):
    """Slope of the log-log step-length histogram tail; alpha = -slope - 1.

    Returns nan when the tail is too short or degenerate to regress.
    """
    positive = lengths[lengths > 0]
    if len(positive) < 20:
        return float("nan")
    lo = np.percentile(positive, 50.0)
    hi = np.percentile(positive, 99.9)
    if not hi > lo > 0:
        return float("nan")
    edges = np.geomspace(lo, hi, 13)
    counts, edges = np.histogram(positive, bins=edges)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    density = counts / (widths * len(positive))
    keep = counts > 0
    if keep.sum() < 3:
        return float("nan")
    slope, _ = np.polyfit(np.log(centers[keep]), np.log(density[keep]), 1)
    return float(-slope - 1.0)


class LevyWalkGenerator(BaseEstimator):
    """Heavy-tailed random-walk baseline fitted to a real corpus.

    fit() pools step lengths and turning angles across all trajectories;
    sample() draws new walks from real start points and rotates them onto
    the corpus's mean migration direction.
    """

    def __init__(self, truncation_percentile=99.9, clip_percentile=99.0,
                 random_state=None):
        self.truncation_percentile = truncation_percentile
        self.clip_percentile = clip_percentile
        self.random_state = random_state

    def fit(self, trajectories, y=None):
        coords = check_trajectory_stack(getattr(trajectories, "coords", trajectories))
        if coords.shape[1] < 3:
            raise ValueError(
                "need at least 3 points per trajectory to fit turning angles"
            )
        diffs = np.diff(coords, axis=1)
        lengths = np.hypot(diffs[:, :, 0], diffs[:, :, 1]).ravel()
        q25, q50, q75 = np.percentile(lengths, [25.0, 50.0, 75.0])
        scale = max((q75 - q25) / 2.0, 1e-12)
        clipped = np.minimum(lengths, np.percentile(lengths, self.clip_percentile))
        mean_start = coords[:, 0, :].mean(axis=0)
        mean_end = coords[:, -1, :].mean(axis=0)
        self.params_ = LevyParams(
            step_location=float(q50),
            step_scale=float(scale),
            angular_sd=_circular_sd(_turning_angles(coords)),
            linear_sd=float(clipped.std()),
            alpha_estimate=_tail_exponent(lengths),
            rotation=azimuth(mean_start, mean_end),
            step_max=float(np.percentile(lengths, self.truncation_percentile)),
        )
        self.start_points_ = coords[:, 0, :].copy()
        self.horizon_ = coords.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise ValueError("LevyWalkGenerator is not fitted; call fit() first")

    def sample(self, count, random_state=None):
        """Draw ``count`` walks of the fitted horizon as a TrajectorySet."""
        self._check_fitted()
        check_positive_int(count, "count")
        rng = check_random_state(
            random_state if random_state is not None else self.random_state
        )
        out = np.empty((count, self.horizon_, 2))
        for i in range(count):
            start = self.start_points_[int(rng.integers(len(self.start_points_)))]
            out[i] = generate_levy_walk(self.params_, self.horizon_ - 1, start, rng)
        return TrajectorySet(out)


def generate_levy_walk(params, n_steps, start, rng):
    """One walk of n_steps steps from ``start``; returns (n_steps+1, 2).

    The walk is built with its first heading exactly 0 (the +lon axis),
    then the whole path is rotated counter-clockwise by params.rotation
    about the start point.
    """
    check_positive_int(n_steps, "n_steps")
    start = np.asarray(start, dtype=float)
    raw = np.abs(params.step_location + params.step_scale * rng.standard_cauchy(n_steps))
    lengths = np.minimum(raw, params.step_max)
    if params.linear_sd > 0:
        lengths = lengths + rng.normal(0.0, params.linear_sd, n_steps)
    turns = rng.normal(0.0, params.angular_sd, n_steps) if params.angular_sd > 0 else np.zeros(n_steps)
    headings = np.concatenate(([0.0], np.cumsum(turns[:-1])))
    steps = np.column_stack((lengths * np.cos(headings), lengths * np.sin(headings)))
    rel = np.vstack((np.zeros(2), np.cumsum(steps, axis=0)))
    c, s = math.cos(params.rotation), math.sin(params.rotation)
    rot = np.array([[c, -s], [s, c]])
    return start + rel @ rot.T


def _se_kernel(xa, xb, signal_var, length_scale, bias_var):
    sq = (xa[:, None] - xb[None, :]) ** 2
    return signal_var * np.exp(-0.5 * sq / length_scale**2) + bias_var


class HeteroscedasticGPR(BaseEstimator):
    """Per-dimension GP over day index with day-dependent noise.

    Parameters
    ----------
    subsample_fraction : fraction of trajectories used for fitting.
    noise_floor : lower bound on the per-day noise variance g(day).
    n_sweeps : coordinate-search passes over the kernel hyperparameters.
    random_state : seed for the trajectory subsample.
    """

    def __init__(self, subsample_fraction=0.5, noise_floor=1e-6, n_sweeps=4,
                 random_state=None):
        self.subsample_fraction = subsample_fraction
        self.noise_floor = noise_floor
        self.n_sweeps = n_sweeps
        self.random_state = random_state

    def fit(self, trajectories, y=None):
        coords = check_trajectory_stack(getattr(trajectories, "coords", trajectories))
        frac = check_fraction(self.subsample_fraction, "subsample_fraction")
        n, m, _ = coords.shape
        rng = check_random_state(self.random_state)
        n_pick = max(1, int(round(frac * n)))
        idx = np.sort(rng.choice(n, size=n_pick, replace=False))
        sub = coords[idx]

        days = np.arange(m, dtype=float)
        norms = np.hypot(sub[:, :, 0], sub[:, :, 1])
        g = norms.var(axis=0)
        g = np.maximum(g, self.noise_floor)

        targets = sub.mean(axis=0)
        models = []
        for d in range(2):
            models.append(self._fit_dimension(days, targets[:, d], g))

        self.subsample_indices_ = idx
        self.days_ = days
        self.noise_curve_ = g
        self.targets_ = targets
        self.models_ = models
        self.mean_curve_ = np.column_stack(
            [self._posterior_mean(models[d], days) for d in range(2)]
        )
        self.log_marginal_likelihood_ = float(sum(mdl["lml"] for mdl in models))
        self.horizon_ = m
        return self

    def _fit_dimension(self, x, y, g):
        y_mean = float(y.mean())
        resid = y - y_mean
        var0 = max(float(resid.var()), 1e-2)
        theta = np.log([var0, max(len(x) / 8.0, 1.0), max(0.1 * var0, 1e-2)])
        bounds = (
            (math.log(1e-8), math.log(1e8)),
            (math.log(0.5), math.log(4.0 * len(x))),
            (math.log(1e-8), math.log(1e8)),
        )

        def lml_of(t):
            sf2, ls, sb2 = np.exp(t)
            ky = _se_kernel(x, x, sf2, ls, sb2) + np.diag(g)
            try:
                factor = cho_factor(ky, lower=True)
            except np.linalg.LinAlgError:
                return -np.inf, None, None
            alpha = cho_solve(factor, resid)
            value = (
                -0.5 * float(resid @ alpha)
                - np.log(np.diag(factor[0])).sum()
                - 0.5 * len(x) * np.log(2.0 * np.pi)
            )
            return value, factor, alpha

        best, factor, alpha = lml_of(theta)
        if not np.isfinite(best):
            raise ValueError("kernel matrix not positive definite after flooring")
        factors = np.log([0.25, 0.5, 0.8, 1.25, 2.0, 4.0])
        for _ in range(self.n_sweeps):
            improved = False
            for coord in range(3):
                for step in factors:
                    cand = theta.copy()
                    cand[coord] = np.clip(
                        cand[coord] + step, bounds[coord][0], bounds[coord][1]
                    )
                    value, f_c, a_c = lml_of(cand)
                    if value > best:
                        best, factor, alpha = value, f_c, a_c
                        theta = cand
                        improved = True
            if not improved:
                break
        sf2, ls, sb2 = np.exp(theta)
        chol_lower = cholesky(
            _se_kernel(x, x, sf2, ls, sb2) + np.diag(g), lower=True
        )
        return {
            "signal_var": float(sf2),
            "length_scale": float(ls),
            "bias_var": float(sb2),
            "chol": chol_lower,
            "alpha": alpha,
            "y_mean": y_mean,
            "lml": float(best),
        }

    def _posterior_mean(self, model, query_days):
        k_star = _se_kernel(
            np.asarray(query_days, dtype=float),
            self.days_,
            model["signal_var"],
            model["length_scale"],
            model["bias_var"],
        )
        return k_star @ model["alpha"] + model["y_mean"]

    def _check_fitted(self):
        if not hasattr(self, "models_"):
            raise ValueError("HeteroscedasticGPR is not fitted; call fit() first")

    def predict(self, days):
        """Posterior mean (len(days), 2) at the given day indices."""
        self._check_fitted()
        days = np.asarray(days, dtype=float)
        return np.column_stack(
            [self._posterior_mean(self.models_[d], days) for d in range(2)]
        )

    def noise_at(self, days):
        """Noise variance g interpolated between training days."""
        self._check_fitted()
        return np.interp(np.asarray(days, dtype=float), self.days_, self.noise_curve_)

    def sample(self, count, random_state=None):
        """Posterior mean plus per-day Normal(0, g(day)) noise, as a
        TrajectorySet of ``count`` trajectories."""
        self._check_fitted()
        check_positive_int(count, "count")
        rng = check_random_state(
            random_state if random_state is not None else self.random_state
        )
        sd = np.sqrt(self.noise_curve_)
        noise = rng.standard_normal((count, self.horizon_, 2)) * sd[None, :, None]
        return TrajectorySet(self.mean_curve_[None, :, :] + noise)
