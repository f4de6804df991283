"""Track ingestion: raw GPS fixes to fixed-length daily trajectories.

Raw input is a CSV of timestamped fixes, one subject per ``subject_id``.
Preprocessing keeps the first fix of each calendar day, cuts each
subject's record into seasonal windows of a fixed length, linearly
interpolates short gaps, and drops windows that are missing an endpoint
day or contain a gap longer than the configured maximum.  The result is a
rectangular (n, m, 2) coordinate array wrapped in a TrajectorySet.

Normalization flattens trajectories into rows of interleaved lon/lat
values and divides by ``factor * max|coordinate|`` so the network trains
on values of order one.
"""

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np

from .validation import (
    as_float_array,
    check_lat,
    check_lon,
    check_positive_int,
    check_trajectory_stack,
)

TRACK_HEADER = ["subject_id", "timestamp", "lon", "lat"]
TRAJECTORY_HEADER = ["traj_id", "day_index", "lon", "lat"]


@dataclass(frozen=True)
class RawTrack:
    """All fixes for one subject, ordered by time.

    times holds epoch seconds (UTC); coords is (k, 2) lon/lat.
    """

    subject_id: str
    times: np.ndarray
    coords: np.ndarray

    def __len__(self):
        return len(self.times)


class TrajectorySet:
    """A rectangular stack of equal-length daily trajectories.

    coords has shape (n, m, 2) with the last axis ordered (lon, lat) and
    one point per consecutive day.
    """

    def __init__(self, coords):
        self.coords = check_trajectory_stack(coords)

    def __len__(self):
        return self.coords.shape[0]

    @property
    def horizon(self):
        return self.coords.shape[1]

    @property
    def points(self):
        """All points pooled across trajectories, shape (n*m, 2)."""
        return self.coords.reshape(-1, 2)

    def __repr__(self):
        n, m, _ = self.coords.shape
        return f"TrajectorySet(n={n}, horizon={m})"


def _parse_timestamp(text, context):
    raw = text.strip()
    # fromisoformat on 3.10 rejects a trailing Z; normalize it first
    cleaned = raw.replace("Z", "+00:00") if raw.endswith("Z") else raw
    try:
        dt = datetime.fromisoformat(cleaned)
    except ValueError:
        raise ValueError(f"bad timestamp {context}: {raw!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def parse_tracks(lines):
    """Parse track CSV content into a list of RawTrack, one per subject.

    ``lines`` is an iterable of text lines (or an open text file).  The
    header must be ``subject_id,timestamp,lon,lat``.  Fixes are grouped
    by subject and sorted by time; subjects come out sorted by id.
    Duplicate (subject, timestamp) pairs and out-of-range coordinates are
    rejected.
    """
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("track CSV is empty") from None
    if [h.strip() for h in header] != TRACK_HEADER:
        raise ValueError(
            f"track CSV header must be {','.join(TRACK_HEADER)}, got {','.join(header)}"
        )

    fixes = {}
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
        subject = row[0].strip()
        if not subject:
            raise ValueError(f"line {lineno}: empty subject_id")
        t = _parse_timestamp(row[1], f"on line {lineno}")
        try:
            lon = float(row[2])
            lat = float(row[3])
        except ValueError:
            raise ValueError(f"line {lineno}: bad coordinate value") from None
        lon = check_lon(lon, f"on line {lineno}")
        lat = check_lat(lat, f"on line {lineno}")
        key = (subject, t)
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate fix for {subject!r} at {row[1].strip()}")
        seen.add(key)
        fixes.setdefault(subject, []).append((t, lon, lat))

    tracks = []
    for subject in sorted(fixes):
        rows = sorted(fixes[subject])
        times = np.array([r[0] for r in rows], dtype=float)
        coords = np.array([[r[1], r[2]] for r in rows], dtype=float)
        tracks.append(RawTrack(subject, times, coords))
    return tracks


def _window_start(spec):
    """Accept '03-01' or a (month, day) pair."""
    if isinstance(spec, str):
        parts = spec.split("-")
        if len(parts) != 2:
            raise ValueError(f"window_start must look like 'MM-DD', got {spec!r}")
        month, day = int(parts[0]), int(parts[1])
    else:
        month, day = spec
    if not 1 <= month <= 12 or not 1 <= day <= 31:
        raise ValueError(f"window_start out of range: {spec!r}")
    return month, day


def preprocess(tracks, window_start="03-01", horizon_days=185, max_gap_days=7):
    """Cut raw tracks into complete seasonal windows of daily positions.

    For every subject and every calendar year covered by its fixes, the
    window runs ``horizon_days`` consecutive days from ``window_start``.
    The first fix of each day supplies that day's position.  Windows
    missing their first or last day, or containing a run of more than
    ``max_gap_days`` consecutive missing days, are dropped; shorter gaps
    are filled by linear interpolation between the neighbouring present
    days.  Raises if no window survives.
    """
    month, day = _window_start(window_start)
    horizon_days = check_positive_int(horizon_days, "horizon_days")
    if horizon_days < 2:
        raise ValueError("horizon_days must be at least 2")
    max_gap_days = check_positive_int(max_gap_days, "max_gap_days")

    out = []
    for track in tracks:
        daily = {}
        for t, (lon, lat) in zip(track.times, track.coords):
            d = datetime.fromtimestamp(t, tz=timezone.utc).date()
            if d not in daily:
                daily[d] = (lon, lat)
        if not daily:
            continue
        years = range(min(daily).year - 1, max(daily).year + 1)
        for year in years:
            try:
                start = date(year, month, day)
            except ValueError:
                continue
            days = [start + timedelta(days=i) for i in range(horizon_days)]
            traj = _assemble_window([daily.get(d) for d in days], max_gap_days)
            if traj is not None:
                out.append(traj)
    if not out:
        raise ValueError("no eligible trajectories")
    return TrajectorySet(np.array(out, dtype=float))


def _assemble_window(points, max_gap_days):
    """Fill short gaps by linear interpolation; None when the window fails."""
    if points[0] is None or points[-1] is None:
        return None
    coords = np.full((len(points), 2), np.nan)
    for i, p in enumerate(points):
        if p is not None:
            coords[i] = p
    missing = np.isnan(coords[:, 0])
    i = 0
    while i < len(points):
        if not missing[i]:
            i += 1
            continue
        j = i
        while missing[j]:
            j += 1
        if j - i > max_gap_days:
            return None
        # endpoints i-1 and j are present; fill i..j-1 linearly
        for k in range(i, j):
            frac = (k - (i - 1)) / (j - (i - 1))
            coords[k] = coords[i - 1] + frac * (coords[j] - coords[i - 1])
        i = j
    return coords


@dataclass(frozen=True)
class NormalizationParams:
    """Scale used to map coordinates to network units (value / scale)."""

    scale: float
    factor: float = 0.3

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ValueError(f"degenerate scale: {self.scale}")


def normalize(trajectories, factor=0.3):
    """Flatten a TrajectorySet into training rows and scale them.

    Each trajectory becomes one row of 2*m interleaved values
    (lon0, lat0, lon1, lat1, ...).  The whole matrix is divided by
    ``factor * max|coordinate|``.  Returns (matrix, NormalizationParams).
    """
    coords = trajectories.coords
    if not np.isfinite(factor) or factor <= 0:
        raise ValueError(f"normalization factor must be positive, got {factor}")
    peak = float(np.max(np.abs(coords)))
    if peak == 0.0:
        raise ValueError("degenerate scale: all coordinates are zero")
    params = NormalizationParams(scale=factor * peak, factor=factor)
    n, m, _ = coords.shape
    matrix = coords.reshape(n, 2 * m) / params.scale
    return matrix, params


def denormalize(matrix, params):
    """Invert normalize: rows of interleaved values back to a TrajectorySet."""
    rows = as_float_array(matrix, "matrix")
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.ndim != 2 or rows.shape[1] % 2 != 0 or rows.shape[1] < 4:
        raise ValueError(f"matrix must be (n, 2*m) with m >= 2, got {rows.shape}")
    coords = rows.reshape(rows.shape[0], -1, 2) * params.scale
    return TrajectorySet(coords)


def read_track_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_tracks(fh)


def write_trajectory_csv(path, trajectories):
    """Write a TrajectorySet as traj_id,day_index,lon,lat rows.

    Floats are written with repr so a read-back is bit-exact and repeated
    writes of the same set are byte-identical.
    """
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_HEADER) + "\n")
    for ti, traj in enumerate(trajectories.coords):
        for di, (lon, lat) in enumerate(traj):
            buf.write(f"{ti},{di},{float(lon)!r},{float(lat)!r}\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_trajectory_csv(path):
    """Read a trajectory CSV back into a TrajectorySet.

    Trajectories must have contiguous day indices 0..m-1 and a shared
    horizon; ids keep their order of first appearance.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("trajectory CSV is empty") from None
        if [h.strip() for h in header] != TRAJECTORY_HEADER:
            raise ValueError(
                f"trajectory CSV header must be {','.join(TRAJECTORY_HEADER)}, "
                f"got {','.join(header)}"
            )
        groups = {}
        order = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
            tid = row[0].strip()
            try:
                di = int(row[1])
                lon = float(row[2])
                lat = float(row[3])
            except ValueError:
                raise ValueError(f"line {lineno}: bad numeric value") from None
            if tid not in groups:
                groups[tid] = []
                order.append(tid)
            groups[tid].append((di, lon, lat))
    if not order:
        raise ValueError("no eligible trajectories")
    horizon = None
    stacked = []
    for tid in order:
        rows = sorted(groups[tid])
        indices = [r[0] for r in rows]
        if indices != list(range(len(rows))):
            raise ValueError(f"trajectory {tid!r}: day_index must run 0..m-1 without gaps")
        if horizon is None:
            horizon = len(rows)
        elif len(rows) != horizon:
            raise ValueError(
                f"trajectory {tid!r}: horizon {len(rows)} differs from {horizon}"
            )
        stacked.append([[r[1], r[2]] for r in rows])
    return TrajectorySet(np.array(stacked, dtype=float))
