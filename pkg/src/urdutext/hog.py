"""Histogram-of-oriented-gradients descriptor over a fixed-size window."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import resize_bilinear, to_uint8


@dataclass(frozen=True)
class HogParams:
    window_w: int = 96
    window_h: int = 32
    cell: int = 8
    block: int = 2
    stride: int = 8
    bins: int = 9
    clip: float = 0.2

    def __post_init__(self):
        if self.window_w % self.cell or self.window_h % self.cell:
            raise ValueError("window dimensions must be multiples of the cell size")
        if self.stride % self.cell:
            raise ValueError("block stride must be a multiple of the cell size")
        if self.block * self.cell > min(self.window_w, self.window_h):
            raise ValueError("block does not fit in the window")

    @property
    def blocks_x(self) -> int:
        return (self.window_w - self.block * self.cell) // self.stride + 1

    @property
    def blocks_y(self) -> int:
        return (self.window_h - self.block * self.cell) // self.stride + 1

    @property
    def length(self) -> int:
        return self.blocks_x * self.blocks_y * self.block * self.block * self.bins

    def fingerprint(self) -> str:
        """Model-header tag; models trained under other params are incompatible."""
        return (f"hog w={self.window_w} h={self.window_h} cell={self.cell} block={self.block} "
                f"stride={self.stride} bins={self.bins} clip={self.clip:g}")


_EPS = 1e-12


def gradients(window):
    """Central differences with edge replication; returns magnitude and unsigned angle in degrees."""
    img = np.pad(np.asarray(window, dtype=np.float64), 1, mode="edge")
    gx = img[1:-1, 2:] - img[1:-1, :-2]
    gy = img[2:, 1:-1] - img[:-2, 1:-1]
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    return mag, ang


def cell_histograms(window, params: HogParams = HogParams()) -> np.ndarray:
    """Array of shape (cells_y, cells_x, bins); bin k is centered on k * 180/bins degrees."""
    mag, ang = gradients(window)
    width = 180.0 / params.bins
    pos = ang / width
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo %= params.bins
    hi = (lo + 1) % params.bins
    cy, cx = params.window_h // params.cell, params.window_w // params.cell
    cell_idx = ((np.arange(params.window_h) // params.cell)[:, None] * cx
                + (np.arange(params.window_w) // params.cell)[None, :])
    hist = np.zeros(cy * cx * params.bins)
    np.add.at(hist, (cell_idx * params.bins + lo).ravel(), (mag * (1 - frac)).ravel())
    np.add.at(hist, (cell_idx * params.bins + hi).ravel(), (mag * frac).ravel())
    return hist.reshape(cy, cx, params.bins)


def l2_hys(v: np.ndarray, clip: float) -> np.ndarray:
    v = v / np.sqrt(np.dot(v, v) + _EPS ** 2)
    v = np.minimum(v, clip)
    return v / np.sqrt(np.dot(v, v) + _EPS ** 2)


def hog_descriptor(window, params: HogParams = HogParams()) -> np.ndarray:
    window = np.asarray(window)
    if window.shape != (params.window_h, params.window_w):
        raise ValueError(f"window must be {params.window_w}x{params.window_h}, got "
                         f"{window.shape[1] if window.ndim > 1 else '?'}x{window.shape[0]}")
    hist = cell_histograms(window, params)
    step = params.stride // params.cell
    out = []
    for by in range(params.blocks_y):
        for bx in range(params.blocks_x):
            y0, x0 = by * step, bx * step
            block = hist[y0:y0 + params.block, x0:x0 + params.block].ravel()
            out.append(l2_hys(block, params.clip))
    return np.concatenate(out)


def normalize_line_window(line_crop, params: HogParams = HogParams()) -> np.ndarray:
    """Resize to the window height keeping aspect, then center-crop or edge-pad the width."""
    crop = np.asarray(line_crop)
    if crop.ndim != 2 or crop.size == 0:
        raise ValueError("line crop must be a non-empty 2-D array")
    h, w = crop.shape
    W, H = params.window_w, params.window_h
    new_w = max(1, int(np.floor(w * H / h + 0.5)))
    if (h, w) == (H, new_w):
        scaled = crop.astype(np.uint8)
    else:
        scaled = to_uint8(resize_bilinear(crop, new_w, H))
    if new_w > W:
        x0 = (new_w - W) // 2
        return scaled[:, x0:x0 + W].copy()
    if new_w < W:
        left = (W - new_w) // 2
        return np.pad(scaled, ((0, 0), (left, W - new_w - left)), mode="edge")
    return scaled
