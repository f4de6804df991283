"""Deterministic GeoJSON and SVG rendering of trajectory sets.

Output is plain text built with fixed float formatting, so rendering the
same sets twice gives identical bytes.  Colors follow the reporting
convention: real tracks green, model output blue, baselines red.
"""

import json

import numpy as np

from .validation import check_trajectory_stack

_GREEN = "#2e8b57"
_BLUE = "#1f77b4"
_RED = "#d62728"


def color_for(name):
    lowered = name.lower()
    if lowered == "real":
        return _GREEN
    if lowered in ("wildgen", "generated"):
        return _BLUE
    return _RED


def _named_coords(named_sets):
    out = []
    for name, ts in named_sets:
        coords = check_trajectory_stack(getattr(ts, "coords", ts), name)
        out.append((name, coords))
    return out


def trajectories_to_geojson(named_sets):
    """FeatureCollection with one LineString per trajectory.

    ``named_sets`` is a sequence of (name, TrajectorySet); each feature
    carries its set name and index in properties.
    """
    features = []
    for name, coords in _named_coords(named_sets):
        for i, traj in enumerate(coords):
            features.append(
                {
                    "type": "Feature",
                    "properties": {"set": name, "index": i},
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[float(lon), float(lat)] for lon, lat in traj],
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}


def geojson_dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2) + "\n"


def _bounds(named):
    pts = np.concatenate([c.reshape(-1, 2) for _, c in named], axis=0)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    return lo, span


def render_svg(named_sets, width=800, height=600, margin=40):
    """Plot trajectory sets as SVG polylines in lon/lat axes."""
    named = _named_coords(named_sets)
    lo, span = _bounds(named)
    inner_w = width - 2 * margin
    inner_h = height - 2 * margin

    def to_xy(lon, lat):
        x = margin + (lon - lo[0]) / span[0] * inner_w
        y = height - margin - (lat - lo[1]) / span[1] * inner_h
        return x, y

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for name, coords in named:
        color = color_for(name)
        lines.append(f'<g stroke="{color}" fill="none" stroke-width="1" opacity="0.75">')
        for traj in coords:
            pts = " ".join(
                "{:.2f},{:.2f}".format(*to_xy(lon, lat)) for lon, lat in traj
            )
            lines.append(f'<polyline points="{pts}"/>')
        lines.append("</g>")
    for i, (name, _) in enumerate(named):
        color = color_for(name)
        y = margin + 16 * i
        lines.append(
            f'<text x="{margin}" y="{y}" font-family="monospace" font-size="12" '
            f'fill="{color}">{name}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def latent_scatter_svg(codes, samples=None, width=480, height=480, margin=40):
    """Scatter of the first two latent dimensions: training codes in
    green, drawn samples (if given) in blue."""
    codes = np.asarray(codes, dtype=float)
    if codes.ndim != 2 or codes.shape[1] < 2:
        raise ValueError(f"codes must be (n, d>=2), got shape {codes.shape}")
    groups = [("codes", _GREEN, codes[:, :2])]
    if samples is not None:
        samples = np.asarray(samples, dtype=float)
        groups.append(("samples", _BLUE, samples[:, :2]))
    pts = np.concatenate([g[2] for g in groups], axis=0)
    lo = pts.min(axis=0)
    span = np.maximum(pts.max(axis=0) - lo, 1e-9)
    inner = (width - 2 * margin, height - 2 * margin)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for name, color, arr in groups:
        lines.append(f'<g fill="{color}">')
        for x, y in arr:
            px = margin + (x - lo[0]) / span[0] * inner[0]
            py = height - margin - (y - lo[1]) / span[1] * inner[1]
            lines.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3"/>')
        lines.append("</g>")
    for i, (name, color, _) in enumerate(groups):
        lines.append(
            f'<text x="{margin}" y="{margin + 16 * i}" font-family="monospace" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
