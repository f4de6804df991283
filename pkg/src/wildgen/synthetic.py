"""Synthetic migration corpus generator.

Builds a corpus of smooth, seasonally-aligned trajectories that share a
common route: every trajectory leaves a start region, passes the same
stopover waypoints in order, dwells at each for a fixed number of days,
and ends in an end region.  Per-trajectory variation (endpoint scatter,
waypoint jitter, along-path noise) all scales with ``noise_sd``, so a
zero-noise corpus collapses to identical curves.  Output is fully
determined by the seed.
"""

from dataclasses import dataclass

import numpy as np

from .ingest import TrajectorySet
from .validation import check_positive_int

# shaping constants relative to config values; all per-trajectory
# variation scales with noise_sd so a zero-noise corpus is degenerate
_ENDPOINT_SCATTER = 6.0    # endpoint offset sd as a multiple of noise_sd
_WAYPOINT_JITTER = 1.0     # per-trajectory waypoint jitter sd, same units
_SCHEDULE_JITTER = 18.0    # departure-shift sd in days per unit noise_sd
_LATERAL_FRACTION = 0.20   # waypoint lateral offset scale vs route length
_NOISE_WINDOW = 15         # moving-average window applied to path noise


@dataclass(frozen=True)
class SynthConfig:
    n_trajectories: int = 60
    horizon_days: int = 185
    start_center: tuple = (10.0, 52.0)
    start_radius: float = 4.0
    end_center: tuple = (34.0, 64.0)
    end_radius: float = 4.0
    n_stopovers: int = 3
    stopover_dwell_days: int = 12
    noise_sd: float = 0.3
    seed: int = 1234


def _validate(cfg):
    check_positive_int(cfg.n_trajectories, "n_trajectories")
    check_positive_int(cfg.horizon_days, "horizon_days")
    if cfg.horizon_days < 2:
        raise ValueError("horizon_days must be at least 2")
    if cfg.n_stopovers < 0:
        raise ValueError(f"n_stopovers must be non-negative, got {cfg.n_stopovers}")
    if cfg.n_stopovers > 0:
        check_positive_int(cfg.stopover_dwell_days, "stopover_dwell_days")
    if not np.isfinite(cfg.noise_sd) or cfg.noise_sd < 0:
        raise ValueError(f"noise_sd must be non-negative, got {cfg.noise_sd}")
    for name, radius in (("start_radius", cfg.start_radius), ("end_radius", cfg.end_radius)):
        if not np.isfinite(radius) or radius < 0:
            raise ValueError(f"{name} must be non-negative, got {radius}")
    start = np.asarray(cfg.start_center, dtype=float)
    end = np.asarray(cfg.end_center, dtype=float)
    if start.shape != (2,) or end.shape != (2,):
        raise ValueError("region centers must be (lon, lat) pairs")
    if np.allclose(start, end):
        raise ValueError("start and end regions must be distinct")
    dwell_total = cfg.n_stopovers * cfg.stopover_dwell_days if cfg.n_stopovers else 0
    # every travel leg needs at least one day
    if cfg.horizon_days - 1 - dwell_total < cfg.n_stopovers + 1:
        raise ValueError(
            "horizon_days too short for the requested stopovers and dwell times"
        )
    return start, end


def _smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def _route_waypoints(start, end, n_stopovers, rng):
    """Shared stopover positions: evenly spaced along the route with a
    lateral offset so the corridor bends instead of running straight."""
    if n_stopovers == 0:
        return np.empty((0, 2))
    direction = end - start
    length = float(np.hypot(*direction))
    unit = direction / length
    normal = np.array([-unit[1], unit[0]])
    fracs = (np.arange(1, n_stopovers + 1)) / (n_stopovers + 1)
    lateral = rng.uniform(-1.0, 1.0, size=n_stopovers) * _LATERAL_FRACTION * length
    return start + fracs[:, None] * direction + lateral[:, None] * normal


def _schedule(knot_points, horizon, n_stopovers, dwell):
    """Knot times for start, each stopover arrival/departure, and end.

    Travel days are split across legs in proportion to leg length; every
    leg keeps at least one day.
    """
    legs = np.diff(knot_points, axis=0)
    dists = np.hypot(legs[:, 0], legs[:, 1])
    dists = np.maximum(dists, 1e-9)
    travel = (horizon - 1) - n_stopovers * dwell
    shares = travel * dists / dists.sum()
    shares = np.maximum(shares, 1.0)
    shares *= travel / shares.sum()
    times = [0.0]
    t = 0.0
    for i in range(len(dists)):
        t += shares[i]
        times.append(t)
        if i < len(dists) - 1:
            t += dwell
            times.append(t)
    times = np.array(times)
    # guard against float drift: the final knot is exactly the last day
    times[-1] = horizon - 1
    return times


def _shift_schedule(times, delta):
    """Shift all interior knot times by a common departure offset.

    The offset is clamped so the first and last travel legs keep most of
    their duration, which also preserves knot ordering.
    """
    if len(times) < 3 or delta == 0.0:
        return times
    lo = -0.6 * (times[1] - times[0])
    hi = 0.6 * (times[-1] - times[-2])
    shifted = times.copy()
    shifted[1:-1] += float(np.clip(delta, lo, hi))
    return shifted


def _evaluate_backbone(knot_points, knot_times, horizon, n_stopovers):
    """Piecewise-smoothstep interpolation of the knot polyline per day."""
    # expand (point, time) pairs: dwell holds position across two knots
    pts = [knot_points[0]]
    for i in range(n_stopovers):
        pts.append(knot_points[i + 1])
        pts.append(knot_points[i + 1])
    pts.append(knot_points[-1])
    pts = np.array(pts)
    days = np.arange(horizon, dtype=float)
    out = np.empty((horizon, 2))
    seg = np.searchsorted(knot_times, days, side="right") - 1
    seg = np.clip(seg, 0, len(knot_times) - 2)
    t0 = knot_times[seg]
    t1 = knot_times[seg + 1]
    u = np.where(t1 > t0, (days - t0) / np.where(t1 > t0, t1 - t0, 1.0), 0.0)
    u = np.clip(u, 0.0, 1.0)
    s = _smoothstep(u)
    out = pts[seg] + s[:, None] * (pts[seg + 1] - pts[seg])
    return out


def _smooth_noise(rng, horizon, sd):
    """Temporally correlated noise, tapered to zero at both endpoints."""
    raw = rng.standard_normal((horizon, 2)) * sd
    if sd == 0.0:
        return raw
    w = min(_NOISE_WINDOW, horizon if horizon % 2 == 1 else horizon - 1)
    if w >= 3:
        kernel = np.ones(w) / w
        pad = w // 2
        padded = np.pad(raw, ((pad, pad), (0, 0)), mode="reflect")
        smoothed = np.empty_like(raw)
        for d in range(2):
            smoothed[:, d] = np.convolve(padded[:, d], kernel, mode="valid")
        raw = smoothed * np.sqrt(w)
    taper = np.sin(np.pi * np.linspace(0.0, 1.0, horizon))
    return raw * taper[:, None]


def _clipped_offset(rng, sd, radius):
    """2-d normal offset, scaled back onto the disk when it overshoots."""
    off = rng.standard_normal(2) * sd
    norm = float(np.hypot(*off))
    if norm > radius:
        off = off * (radius / norm) if norm > 0 else off * 0.0
    return off


def generate_corpus(config=None, **overrides):
    """Generate a deterministic synthetic corpus.

    Accepts a SynthConfig or keyword overrides of its fields.  Returns a
    TrajectorySet of shape (n_trajectories, horizon_days, 2).
    """
    if config is None:
        config = SynthConfig(**overrides)
    elif overrides:
        raise TypeError("pass either a config or keyword overrides, not both")
    start, end = _validate(config)
    rng = np.random.default_rng(config.seed)

    waypoints = _route_waypoints(start, end, config.n_stopovers, rng)
    dwell = config.stopover_dwell_days if config.n_stopovers else 0

    out = np.empty((config.n_trajectories, config.horizon_days, 2))
    for i in range(config.n_trajectories):
        s_off = _clipped_offset(rng, _ENDPOINT_SCATTER * config.noise_sd, config.start_radius)
        e_off = _clipped_offset(rng, _ENDPOINT_SCATTER * config.noise_sd, config.end_radius)
        jitter = rng.standard_normal(waypoints.shape) * _WAYPOINT_JITTER * config.noise_sd
        knots = np.vstack([start + s_off, waypoints + jitter, end + e_off])
        times = _schedule(knots, config.horizon_days, config.n_stopovers, dwell)
        delta = float(rng.standard_normal()) * _SCHEDULE_JITTER * config.noise_sd
        times = _shift_schedule(times, delta)
        backbone = _evaluate_backbone(knots, times, config.horizon_days, config.n_stopovers)
        noise = _smooth_noise(rng, config.horizon_days, config.noise_sd)
        out[i] = backbone + noise
    return TrajectorySet(out)
