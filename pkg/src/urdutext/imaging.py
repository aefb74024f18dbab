"""Raster types, color conversion and binary PPM/PGM I/O.

Images are held as uint8 numpy arrays of shape ``(height, width, channels)``.
A grayscale plane is a plain 2-D uint8 array. Coordinates are ``(x, y)`` with
the origin at the top-left corner and ``y`` growing downward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError

GrayImage = np.ndarray


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box must have positive size, got w={self.w} h={self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def translate(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def within(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x2 <= width and self.y2 <= height

    @staticmethod
    def union(boxes) -> "BoundingBox":
        boxes = list(boxes)
        if not boxes:
            raise ValueError("union of no boxes")
        x0 = min(b.x for b in boxes)
        y0 = min(b.y for b in boxes)
        x1 = max(b.x2 for b in boxes)
        y1 = max(b.y2 for b in boxes)
        return BoundingBox(x0, y0, x1 - x0, y1 - y0)


class Image:
    """An 8-bit raster with one or three channels."""

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) array, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("image must be non-empty")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def channels(self) -> int:
        return self._data.shape[2]

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(np.array_equal(self._data, other._data))

    def __repr__(self):
        return f"Image(width={self.width}, height={self.height}, channels={self.channels})"


# --- PPM / PGM ---------------------------------------------------------------

_WHITESPACE = b" \t\n\r\v\f"


def _read_header_tokens(buf: bytes, count: int):
    """Return ``count`` header tokens and the offset of the raster payload."""
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise FormatError("truncated header", pos)
        if buf[pos] == ord("#"):
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and buf[pos] not in _WHITESPACE and buf[pos] != ord("#"):
            pos += 1
        tokens.append((buf[start:pos], start))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or buf[pos] not in _WHITESPACE:
        raise FormatError("missing whitespace after header", pos)
    return tokens, pos + 1


def decode_image(buf: bytes) -> Image:
    """Parse a binary PGM (P5) or PPM (P6) stream with maxval 255."""
    buf = bytes(buf)
    if len(buf) < 2:
        raise FormatError("stream too short for a magic number", 0)
    magic = buf[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported magic {magic!r}", 0)
    tokens, offset = _read_header_tokens(buf[2:], 3)
    values = []
    for tok, at in tokens:
        if not tok.isdigit():
            raise FormatError(f"non-numeric header token {tok!r}", at + 2)
        values.append(int(tok))
    width, height, maxval = values
    if width <= 0 or height <= 0:
        raise FormatError("image dimensions must be positive", tokens[0][1] + 2)
    if maxval != 255:
        raise FormatError(f"maxval must be 255, got {maxval}", tokens[2][1] + 2)
    offset += 2
    expected = width * height * channels
    payload = buf[offset:offset + expected]
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            offset + len(payload),
        )
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return Image(data)


def encode_image(img: Image) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.data.tobytes()


def read_image(path) -> Image:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def write_image(path, img: Image) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_image(img))


# --- conversions ---------------------------------------------------------------

def to_grayscale(img: Image) -> GrayImage:
    """BT.601 luma, rounded half up."""
    data = img.data
    if img.channels == 1:
        return data[:, :, 0].copy()
    # integer arithmetic keeps round-half-up exact: weights are in thousandths
    r = data[:, :, 0].astype(np.int64)
    g = data[:, :, 1].astype(np.int64)
    b = data[:, :, 2].astype(np.int64)
    luma = (299 * r + 587 * g + 114 * b + 500) // 1000
    return np.clip(luma, 0, 255).astype(np.uint8)


def extract_channel(img: Image, idx: int) -> GrayImage:
    if not 0 <= idx < img.channels:
        raise ValueError(f"channel {idx} out of range for a {img.channels}-channel image")
    return img.data[:, :, idx].copy()


def crop(plane: np.ndarray, box: BoundingBox) -> np.ndarray:
    return plane[box.y:box.y2, box.x:box.x2]


def resize_bilinear(plane: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Bilinear resample with pixel-center alignment; returns float64.

    An exact 2x downscale averages each 2x2 block, and a same-size resize is
    the identity.
    """
    src = np.asarray(plane, dtype=np.float64)
    h, w = src.shape
    if new_w <= 0 or new_h <= 0:
        raise ValueError("target size must be positive")

    def axis(n_out, n_in):
        pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        pos = np.clip(pos, 0.0, n_in - 1)
        lo = np.floor(pos).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    y0, y1, fy = axis(new_h, h)
    x0, x1, fx = axis(new_w, w)
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    return top * (1 - fy[:, None]) + bottom * fy[:, None]


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Round half up and clamp to the 8-bit range."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)
