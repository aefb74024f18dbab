"""Maximally stable extremal regions over a component tree.

The tree is built by a union-find flood over pixels sorted by intensity
(4-connectivity). A node is created for every component that gains pixels at
a level, so the component containing a node at any later level is found by
walking parent links, and the component it grew from by walking down the
largest child.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from .imaging import BoundingBox, Image, extract_channel, to_grayscale

DARK = "dark"
BRIGHT = "bright"
POLARITIES = (DARK, BRIGHT)


@dataclass(frozen=True)
class MserParams:
    delta: int = 5
    min_area: int = 30
    max_area_fraction: float = 0.25
    max_variation: float = 0.5
    dedup_iou: float = 0.7

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.min_area <= 0:
            raise ValueError("min_area must be positive")
        if not 0 < self.max_area_fraction <= 1:
            raise ValueError("max_area_fraction must lie in (0, 1]")
        if self.max_variation <= 0:
            raise ValueError("max_variation must be positive")
        if not 0 < self.dedup_iou <= 1:
            raise ValueError("dedup_iou must lie in (0, 1]")


@dataclass(eq=False)
class ExtremalRegion:
    """One connected region. ``flat`` holds sorted ``y * width + x`` indices."""

    flat: np.ndarray
    image_shape: tuple[int, int]
    level: int
    variation: float
    polarity: str = DARK
    source_channel: int = 0
    bbox: BoundingBox = field(init=False)

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=np.int64)
        w = self.image_shape[1]
        ys, xs = np.divmod(self.flat, w)
        self.bbox = BoundingBox(int(xs.min()), int(ys.min()),
                                int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))

    @property
    def area(self) -> int:
        return int(self.flat.size)

    @cached_property
    def coords(self) -> np.ndarray:
        """Pixel coordinates as an ``(n, 2)`` array of ``(x, y)``."""
        ys, xs = np.divmod(self.flat, self.image_shape[1])
        return np.stack([xs, ys], axis=1)

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean mask cropped to the bounding box."""
        b = self.bbox
        m = np.zeros((b.h, b.w), dtype=bool)
        c = self.coords
        m[c[:, 1] - b.y, c[:, 0] - b.x] = True
        return m

    @cached_property
    def anchor(self) -> tuple[int, int]:
        """Leftmost pixel, topmost among ties, as ``(x, y)``."""
        c = self.coords
        left = c[:, 0] == c[:, 0].min()
        return int(c[left, 0][0]), int(c[left, 1].min())

    def dump_line(self) -> str:
        b = self.bbox
        return (f"{self.source_channel} {self.polarity} {self.level} {self.variation:.6f} "
                f"{b.x} {b.y} {b.w} {b.h} {self.area}")


# --- numba kernels ---------------------------------------------------------------

@numba.njit(cache=True)
def _find(uf, p):
    while uf[p] != p:
        uf[p] = uf[uf[p]]
        p = uf[p]
    return p


@numba.njit(cache=True)
def _flood(vals, order, width, height):
    n = vals.size
    uf = np.full(n, -1, np.int64)
    size = np.zeros(n, np.int64)
    comp_node = np.full(n, -1, np.int64)
    node_level = np.zeros(n, np.int64)
    node_parent = np.full(n, -1, np.int64)
    node_area = np.zeros(n, np.int64)
    node_rep = np.zeros(n, np.int64)
    pix_node = np.zeros(n, np.int64)
    pending = np.zeros(n, np.int64)
    nnodes = 0
    i = 0
    while i < n:
        t = vals[order[i]]
        j = i
        while j < n and vals[order[j]] == t:
            j += 1
        npend = 0
        for k in range(i, j):
            p = order[k]
            uf[p] = p
            size[p] = 1
            comp_node[p] = -1
            x = p % width
            y = p // width
            for d in range(4):
                if d == 0:
                    if x == 0:
                        continue
                    q = p - 1
                elif d == 1:
                    if x == width - 1:
                        continue
                    q = p + 1
                elif d == 2:
                    if y == 0:
                        continue
                    q = p - width
                else:
                    if y == height - 1:
                        continue
                    q = p + width
                if uf[q] == -1:
                    continue
                rp = _find(uf, p)
                rq = _find(uf, q)
                if rp == rq:
                    continue
                for r in (rp, rq):
                    c = comp_node[r]
                    if c >= 0:
                        pending[npend] = c
                        npend += 1
                        comp_node[r] = -1
                if size[rp] < size[rq]:
                    rp, rq = rq, rp
                uf[rq] = rp
                size[rp] += size[rq]
                comp_node[rp] = -1
        for k in range(i, j):
            p = order[k]
            r = _find(uf, p)
            if comp_node[r] == -1:
                node_level[nnodes] = t
                node_area[nnodes] = size[r]
                node_rep[nnodes] = r
                comp_node[r] = nnodes
                nnodes += 1
            pix_node[p] = comp_node[r]
        for k in range(npend):
            c = pending[k]
            node_parent[c] = comp_node[_find(uf, node_rep[c])]
        i = j
    return node_level[:nnodes], node_parent[:nnodes], node_area[:nnodes], pix_node


@numba.njit(cache=True)
def _preorder(parent):
    """Preorder numbering in which every subtree occupies a contiguous range.

    Parents always have larger indices than their children, so a reverse scan
    visits each parent before its children.
    """
    m = parent.size
    sub = np.ones(m, np.int64)
    for c in range(m):
        p = parent[c]
        if p >= 0:
            sub[p] += sub[c]
    tin = np.zeros(m, np.int64)
    cursor = np.zeros(m, np.int64)
    for c in range(m - 1, -1, -1):
        p = parent[c]
        if p < 0:
            tin[c] = 0
        else:
            tin[c] = cursor[p]
            cursor[p] += sub[c]
        cursor[c] = tin[c] + 1
    return tin, sub


@numba.njit(cache=True)
def _size_up(n, t, parent, level, area):
    a = n
    while parent[a] >= 0 and level[parent[a]] <= t:
        a = parent[a]
    return area[a]


@numba.njit(cache=True)
def _size_down(n, t, main_child, level, area):
    if t < 0:
        return 0
    a = n
    while level[a] > t:
        a = main_child[a]
        if a < 0:
            return 0
    return area[a]


@numba.njit(cache=True)
def _variation(n, t, delta, parent, main_child, level, area):
    up = _size_up(n, t + delta, parent, level, area)
    down = _size_down(n, t - delta, main_child, level, area)
    return (up - down) / area[n]


@numba.njit(cache=True)
def _stability(parent, level, area, delta):
    """Per node: lowest local-minimum variation along its branch, or inf if none.

    The variation sequence of a branch runs over levels; a node covers levels
    from its own up to just below its parent's. A local minimum is a maximal
    run of equal values whose neighbours on both sides are no smaller, where
    the neighbours beyond the node's range come from its largest child and
    its parent.
    """
    m = parent.size
    main_child = np.full(m, -1, np.int64)
    for c in range(m):
        p = parent[c]
        if p >= 0:
            mc = main_child[p]
            if mc < 0 or area[c] > area[mc]:
                main_child[p] = c
    first_v = np.zeros(m)
    last_v = np.zeros(m)
    for n in range(m):
        hi = 255 if parent[n] < 0 else level[parent[n]] - 1
        first_v[n] = _variation(n, level[n], delta, parent, main_child, level, area)
        last_v[n] = _variation(n, hi, delta, parent, main_child, level, area)
    best = np.full(m, np.inf)
    vals = np.zeros(258)
    for n in range(m):
        lo = level[n]
        hi = 255 if parent[n] < 0 else level[parent[n]] - 1
        k = hi - lo + 1
        vals[0] = np.inf if main_child[n] < 0 else last_v[main_child[n]]
        for i in range(k):
            vals[i + 1] = _variation(n, lo + i, delta, parent, main_child, level, area)
        vals[k + 1] = np.inf if parent[n] < 0 else first_v[parent[n]]
        i = 1
        while i <= k:
            j = i
            while j + 1 <= k and vals[j + 1] == vals[i]:
                j += 1
            if vals[i - 1] >= vals[i] and vals[j + 1] >= vals[i] and vals[i] < best[n]:
                best[n] = vals[i]
            i = j + 1
    return best


# --- component tree ------------------------------------------------------------------

class ComponentTree:
    """Nesting hierarchy of the threshold sets of one plane.

    Levels are stored in the flooded value space: raw intensity for the dark
    polarity, ``255 - intensity`` for the bright one.
    """

    def __init__(self, plane, polarity=DARK):
        plane = np.asarray(plane)
        if plane.ndim != 2 or plane.size == 0:
            raise ValueError("plane must be a non-empty 2-D array")
        if polarity not in POLARITIES:
            raise ValueError(f"unknown polarity {polarity!r}")
        self.polarity = polarity
        self.height, self.width = plane.shape
        vals = plane.astype(np.int64).ravel()
        if polarity == BRIGHT:
            vals = 255 - vals
        order = np.argsort(vals, kind="stable")
        self.level, self.parent, self.area, pix_node = _flood(vals, order, self.width, self.height)
        self.tin, self.subtree = _preorder(self.parent)
        keys = self.tin[pix_node]
        self._pixel_order = np.argsort(keys, kind="stable")
        self._sorted_keys = keys[self._pixel_order]

    def __len__(self):
        return self.level.size

    @property
    def root(self) -> int:
        return int(np.flatnonzero(self.parent < 0)[0])

    def pixels(self, node: int) -> np.ndarray:
        """Sorted flat indices of every pixel in the node's component."""
        lo = np.searchsorted(self._sorted_keys, self.tin[node], side="left")
        hi = np.searchsorted(self._sorted_keys, self.tin[node] + self.subtree[node], side="left")
        return np.sort(self._pixel_order[lo:hi])

    def is_ancestor(self, a: int, b: int) -> bool:
        """True when ``b`` lies in the subtree of ``a`` (a node is its own ancestor)."""
        return self.tin[a] <= self.tin[b] < self.tin[a] + self.subtree[a]

    def cut(self, t: int) -> list[int]:
        """Nodes whose components are the connected components of values <= t."""
        parent_level = np.where(self.parent >= 0, self.level[self.parent], 256)
        return [int(n) for n in np.flatnonzero((self.level <= t) & (parent_level > t))]


def build_component_tree(plane, polarity=DARK) -> ComponentTree:
    return ComponentTree(plane, polarity)


def stable_regions(tree: ComponentTree, params: MserParams = MserParams(),
                   source_channel: int = 0) -> list[ExtremalRegion]:
    best_v = _stability(tree.parent, tree.level, tree.area, params.delta)
    max_area = params.max_area_fraction * tree.width * tree.height
    keep = ((best_v <= params.max_variation)
            & (tree.area >= params.min_area) & (tree.area <= max_area))
    cand = np.flatnonzero(keep)
    # prune nested near-duplicates: on one branch, IoU of nested sets is the area ratio
    ranked = sorted(cand, key=lambda n: (best_v[n], -tree.area[n], n))
    tin, sub, area = tree.tin, tree.subtree, tree.area
    k_tin = np.empty(len(ranked), np.int64)
    k_end = np.empty(len(ranked), np.int64)
    k_area = np.empty(len(ranked), np.float64)
    chosen = []
    for n in ranked:
        m = len(chosen)
        if m:
            a_tin, a_end = k_tin[:m], k_end[:m]
            nested = ((a_tin <= tin[n]) & (tin[n] < a_end)) | ((tin[n] <= a_tin) & (a_tin < tin[n] + sub[n]))
            ratio = np.minimum(k_area[:m], area[n]) / np.maximum(k_area[:m], area[n])
            if np.any(nested & (ratio >= params.dedup_iou)):
                continue
        k_tin[m], k_end[m], k_area[m] = tin[n], tin[n] + sub[n], area[n]
        chosen.append(n)
    regions = []
    shape = (tree.height, tree.width)
    for n in chosen:
        t = int(tree.level[n])
        level = t if tree.polarity == DARK else 255 - t
        regions.append(ExtremalRegion(tree.pixels(n), shape, level, float(best_v[n]),
                                      tree.polarity, source_channel))
    return sorted(regions, key=_region_order)


def _region_order(r: ExtremalRegion):
    return (r.source_channel, POLARITIES.index(r.polarity), r.level, r.anchor, r.area)


def mask_iou(a: ExtremalRegion, b: ExtremalRegion) -> float:
    ba, bb = a.bbox, b.bbox
    if ba.x2 <= bb.x or bb.x2 <= ba.x or ba.y2 <= bb.y or bb.y2 <= ba.y:
        return 0.0
    inter = np.intersect1d(a.flat, b.flat, assume_unique=True).size
    return inter / (a.area + b.area - inter)


def dedup_regions(regions, iou_threshold: float) -> list[ExtremalRegion]:
    """Collapse regions with mask IoU >= threshold, keeping the most stable one."""
    ranked = sorted(regions, key=lambda r: (r.variation, -r.area, r.source_channel,
                                            POLARITIES.index(r.polarity), r.level, r.anchor))
    kept = []
    for r in ranked:
        clash = False
        for k in kept:
            small, big = sorted((r.area, k.area))
            if small / big < iou_threshold:
                continue
            if mask_iou(r, k) >= iou_threshold:
                clash = True
                break
        if not clash:
            kept.append(r)
    return sorted(kept, key=_region_order)


def channel_enhanced_mser(img: Image, params: MserParams = MserParams()) -> list[ExtremalRegion]:
    """MSER on every color plane and both polarities, fused by mask-IoU dedup."""
    if img.channels == 1:
        planes = [to_grayscale(img)]
    else:
        planes = [extract_channel(img, c) for c in range(img.channels)]
    found = []
    for c, plane in enumerate(planes):
        for polarity in POLARITIES:
            tree = ComponentTree(plane, polarity)
            found.extend(stable_regions(tree, params, source_channel=c))
    return dedup_regions(found, params.dedup_iou)
