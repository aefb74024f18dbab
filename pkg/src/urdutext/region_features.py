"""Geometric descriptors of a binary region mask.

All functions take a 2-D boolean mask; only its set pixels matter, so the
mask need not be cropped tightly.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np
from scipy import ndimage

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True)
class GeometricFeatures:
    area: int
    aspect_ratio: float
    eccentricity: float
    solidity: float
    extent: float
    euler_number: int
    stroke_width_mean: float
    stroke_width_cv: float

    def dump_line(self, index: int) -> str:
        """Region index followed by the eight features."""
        vals = " ".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in astuple(self))
        return f"{index} {vals}"

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def _tight(mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or not mask.any():
        raise ValueError("mask must be a non-empty 2-D boolean array")
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]


def eccentricity(mask) -> float:
    """Eccentricity of the ellipse with the same second moments.

    Pixels are unit squares, so each contributes 1/12 to the variance along
    both axes; this keeps a one-pixel-thick run strictly below 1.
    """
    ys, xs = np.nonzero(_tight(mask))
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    mu20 = np.mean((xs - xs.mean()) ** 2) + 1.0 / 12.0
    mu02 = np.mean((ys - ys.mean()) ** 2) + 1.0 / 12.0
    mu11 = np.mean((xs - xs.mean()) * (ys - ys.mean()))
    half_sum = (mu20 + mu02) / 2.0
    root = np.hypot((mu20 - mu02) / 2.0, mu11)
    lam1 = half_sum + root
    lam2 = half_sum - root
    if lam1 <= 0:
        return 0.0
    return float(np.sqrt(max(0.0, 1.0 - lam2 / lam1)))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> list[tuple[float, float]]:
    """Andrew's monotone chain; counter-clockwise, no collinear vertices."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    p = np.asarray(poly, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def hull_corner_points(mask) -> np.ndarray:
    """Pixel-cell corners that can lie on the hull: row extremes only."""
    m = _tight(mask)
    rows = np.flatnonzero(m.any(axis=1))
    left = m.argmax(axis=1)[rows]
    right = m.shape[1] - 1 - m[:, ::-1].argmax(axis=1)[rows]
    pts = []
    for y, x0, x1 in zip(rows, left, right):
        pts += [(x0, y), (x0, y + 1), (x1 + 1, y), (x1 + 1, y + 1)]
    return np.asarray(pts, dtype=np.int64)


def solidity(mask) -> float:
    """Pixel count over the area of the convex hull of all pixel-cell corners."""
    m = _tight(mask)
    hull = convex_hull(hull_corner_points(m))
    return float(m.sum() / polygon_area(hull))


def euler_number(mask) -> int:
    """4-connected foreground components minus 8-connected holes."""
    m = np.pad(_tight(mask), 1)
    _, n_fg = ndimage.label(m, structure=_FOUR)
    _, n_bg = ndimage.label(~m, structure=_EIGHT)
    # the padded border is one background component, every other one is a hole
    return int(n_fg - (n_bg - 1))


def distance_map(mask) -> np.ndarray:
    """Distance from each foreground pixel to the nearest background pixel center."""
    m = np.pad(_tight(mask), 1)
    return ndimage.distance_transform_edt(m)[1:-1, 1:-1]


def stroke_width_stats(mask) -> tuple[float, float]:
    """Mean and coefficient of variation of stroke width along distance ridges.

    The half-cell convention subtracts 0.5 from the center distance, so a
    k-pixel-thick bar (k odd) measures exactly k and a lone pixel measures 1.
    """
    m = _tight(mask)
    dist = distance_map(m)
    neighborhood_max = ndimage.maximum_filter(dist, size=3, mode="constant", cval=0.0)
    ridge = m & (dist >= neighborhood_max)
    widths = 2.0 * (dist[ridge] - 0.5)
    mean = float(widths.mean())
    if widths.size < 2 or mean == 0:
        return mean, 0.0
    return mean, float(widths.std() / mean)


def compute_features(region) -> GeometricFeatures:
    """All features of a region; accepts a mask or anything with a ``mask``."""
    m = _tight(getattr(region, "mask", region))
    h, w = m.shape
    area = int(m.sum())
    sw_mean, sw_cv = stroke_width_stats(m)
    return GeometricFeatures(
        area=area,
        aspect_ratio=w / h,
        eccentricity=eccentricity(m),
        solidity=solidity(m),
        extent=area / (w * h),
        euler_number=euler_number(m),
        stroke_width_mean=sw_mean,
        stroke_width_cv=sw_cv,
    )
