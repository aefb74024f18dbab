"""Character linking: pair regions by the centroid rule and merge pairs into lines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .imaging import BoundingBox


@dataclass(frozen=True)
class LinkParams:
    vertical_factor: float = 1.0
    horizontal_factor: float = 2.0


@dataclass(frozen=True)
class TextLine:
    members: tuple[int, ...]  # indices into the linked region list, right-to-left
    bbox: BoundingBox
    mean_height: float


def _box(item) -> BoundingBox:
    return item if isinstance(item, BoundingBox) else item.bbox


def linkable(a, b, params: LinkParams = LinkParams()) -> bool:
    """Centroids within the smaller height vertically and twice the larger height horizontally."""
    a, b = _box(a), _box(b)
    (ax, ay), (bx, by) = a.center, b.center
    return (abs(ay - by) <= params.vertical_factor * min(a.h, b.h)
            and abs(ax - bx) <= params.horizontal_factor * max(a.h, b.h))


def link_matrix(boxes, params: LinkParams = LinkParams()) -> np.ndarray:
    """Boolean adjacency of the linkable relation (diagonal left False)."""
    if not boxes:
        return np.zeros((0, 0), dtype=bool)
    arr = np.array([[b.x, b.y, b.w, b.h] for b in boxes], dtype=np.float64)
    cx = arr[:, 0] + arr[:, 2] / 2.0
    cy = arr[:, 1] + arr[:, 3] / 2.0
    h = arr[:, 3]
    dy = np.abs(cy[:, None] - cy[None, :])
    dx = np.abs(cx[:, None] - cx[None, :])
    adj = ((dy <= params.vertical_factor * np.minimum(h[:, None], h[None, :]))
           & (dx <= params.horizontal_factor * np.maximum(h[:, None], h[None, :])))
    np.fill_diagonal(adj, False)
    return adj


def link_lines(regions, params: LinkParams = LinkParams()) -> list[TextLine]:
    """Connected components (size >= 2) of the linkable graph, as text lines."""
    boxes = [_box(r) for r in regions]
    if not boxes:
        return []
    adj = link_matrix(boxes, params)
    n_comp, labels = connected_components(csr_matrix(adj), directed=False)
    lines = []
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        if idx.size < 2:
            continue
        # right-to-left reading order; ties keep input order
        members = sorted(idx.tolist(), key=lambda i: (-boxes[i].center[0], i))
        lines.append(TextLine(
            members=tuple(members),
            bbox=BoundingBox.union(boxes[i] for i in members),
            mean_height=float(np.mean([boxes[i].h for i in members])),
        ))
    lines.sort(key=lambda ln: (ln.bbox.y, ln.bbox.x, ln.members))
    return lines
