"""Shared input-validation helpers.

Every public entry point funnels array-like input through these checks so
error messages stay consistent across the package.
"""

import numpy as np


def as_float_array(x, name="array"):
    """Coerce to a float ndarray and reject non-finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains a non-finite value")
    return arr


def check_points(points, name="points", allow_empty=False):
    """Validate an (n, 2) array of lon/lat pairs."""
    arr = as_float_array(points, name)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return arr


def check_trajectory_stack(coords, name="trajectories"):
    """Validate an (n, m, 2) stack of equal-length trajectories."""
    arr = as_float_array(coords, name)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"{name} must have shape (n, m, 2), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if arr.shape[1] < 2:
        raise ValueError(f"{name} must have at least 2 points per trajectory")
    return arr


def check_lon(value, context=""):
    where = f" {context}" if context else ""
    if not np.isfinite(value) or not -180.0 <= value <= 180.0:
        raise ValueError(f"longitude out of range{where}: {value}")
    return float(value)


def check_lat(value, context=""):
    where = f" {context}" if context else ""
    if not np.isfinite(value) or not -90.0 <= value <= 90.0:
        raise ValueError(f"latitude out of range{where}: {value}")
    return float(value)


def check_positive_int(value, name):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return int(value)


def check_fraction(value, name, inclusive_low=False):
    v = float(value)
    low_ok = v >= 0.0 if inclusive_low else v > 0.0
    if not np.isfinite(v) or not low_ok or v > 1.0:
        lo = "0" if inclusive_low else "(0"
        raise ValueError(f"{name} must lie in {lo}, 1], got {value}")
    return v


def check_random_state(random_state):
    """Return a numpy Generator for int seeds, Generators, or None."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)
