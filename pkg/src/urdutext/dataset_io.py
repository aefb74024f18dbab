"""Annotations, patch datasets, corpus layout and the synthetic scene generator.

Corpus layout::

    <root>/images/<id>.ppm   scene image
    <root>/gt/<id>.txt       one text-line box per line, "x y w h"
    <root>/chars/<id>.txt    glyph boxes (synthetic corpora only)
    <root>/train.txt         manifest, one image id per line
    <root>/test.txt
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import FormatError
from .filtering import GeometricThresholds, PatchSpec
from .hog import HogParams, normalize_line_window
from .imaging import (BoundingBox, Image, crop, encode_image, read_image, resize_bilinear,
                      to_grayscale, to_uint8, write_image)
from .linking import linkable
from .pipeline_eval import overlap_ratio
from .region_features import compute_features

log = logging.getLogger(__name__)


# --- annotations -------------------------------------------------------------------------------

@dataclass
class Annotation:
    image_id: str
    boxes: list[BoundingBox] = field(default_factory=list)


def parse_annotation(text: str, image_id: str = "") -> Annotation:
    boxes = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 4:
            raise FormatError(f"line {lineno}: expected 'x y w h', got {raw!r}")
        try:
            x, y, w, h = (int(t) for t in tokens)
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer token in {raw!r}") from None
        if w <= 0 or h <= 0:
            raise FormatError(f"line {lineno}: width and height must be positive")
        boxes.append(BoundingBox(x, y, w, h))
    return Annotation(image_id, boxes)


def format_annotation(ann: Annotation) -> str:
    return "".join(f"{b.x} {b.y} {b.w} {b.h}\n" for b in ann.boxes)


def load_annotation(path) -> Annotation:
    path = Path(path)
    with open(path, encoding="ascii") as fh:
        return parse_annotation(fh.read(), path.stem)


def save_annotation(path, ann: Annotation) -> None:
    atomic_write(path, format_annotation(ann).encode("ascii"))


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read_manifest(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]


def write_manifest(path, ids) -> None:
    atomic_write(path, "".join(f"{i}\n" for i in ids).encode("utf-8"))


def list_ids(directory, suffix) -> list[str]:
    return sorted(p.stem for p in Path(directory).glob(f"*{suffix}"))


# --- patch datasets ----------------------------------------------------------------------------

@dataclass
class PatchDataset:
    positives: list[np.ndarray] = field(default_factory=list)
    negatives: list[np.ndarray] = field(default_factory=list)
    # (label, image_id, box) per patch, positives first
    manifest: list[tuple[int, str, BoundingBox]] = field(default_factory=list)
    warnings: int = 0

    def extend(self, other: "PatchDataset") -> None:
        self.positives += other.positives
        self.negatives += other.negatives
        self.manifest += other.manifest
        self.warnings += other.warnings


def sample_negative_boxes(rng, width, height, avoid, sizes, count, max_overlap=0.1, tries=200):
    """Random boxes, sized like ``sizes``, overlapping every ``avoid`` box by at most ``max_overlap``."""
    out = []
    failures = 0
    for _ in range(count):
        for _ in range(tries):
            w0, h0 = sizes[rng.integers(len(sizes))]
            s = rng.uniform(0.8, 1.25)
            w = int(min(width, max(4, round(w0 * s))))
            h = int(min(height, max(4, round(h0 * s))))
            box = BoundingBox(int(rng.integers(0, width - w + 1)), int(rng.integers(0, height - h + 1)), w, h)
            if all(overlap_ratio(g, box) <= max_overlap for g in avoid):
                out.append(box)
                break
        else:
            failures += 1
    return out, failures


def jittered(rng, box: BoundingBox, width, height, frac=0.1) -> BoundingBox:
    """``box`` shifted by up to ``frac`` of its size per axis, kept inside the image."""
    mx, my = int(box.w * frac), int(box.h * frac)
    x = int(np.clip(box.x + rng.integers(-mx, mx + 1), 0, width - box.w))
    y = int(np.clip(box.y + rng.integers(-my, my + 1), 0, height - box.h))
    return BoundingBox(x, y, box.w, box.h)


def extract_patches(img: Image, ann: Annotation, negatives_per_positive: int = 2, seed: int = 0,
                    spec: PatchSpec = PatchSpec(), positive_boxes=None, jitter: int = 0) -> PatchDataset:
    """Positives are the boxes resized to the patch size; negatives are random crops.

    ``positive_boxes`` overrides which boxes become positives (e.g. glyph
    boxes); negatives always avoid both those and the annotation boxes.
    ``jitter`` adds that many slightly shifted copies of every positive.
    The negative count is ``negatives_per_positive`` times the positive count.
    """
    rng = np.random.default_rng(seed)
    gray = to_grayscale(img)
    base = list(ann.boxes if positive_boxes is None else positive_boxes)
    ds = PatchDataset()
    if not base:
        return ds
    pos_boxes = list(base)
    for b in base:
        pos_boxes += [jittered(rng, b, img.width, img.height) for _ in range(jitter)]
    for b in pos_boxes:
        ds.positives.append(to_uint8(resize_bilinear(crop(gray, b), spec.width, spec.height)))
        ds.manifest.append((1, ann.image_id, b))
    avoid = list(ann.boxes) + base
    sizes = [(b.w, b.h) for b in base]
    neg, failures = sample_negative_boxes(rng, img.width, img.height, avoid, sizes,
                                          negatives_per_positive * len(pos_boxes))
    if failures:
        log.warning("%s: only %d of %d negative patches found", ann.image_id, len(neg),
                    len(neg) + failures)
    ds.warnings += failures
    for b in neg:
        ds.negatives.append(to_uint8(resize_bilinear(crop(gray, b), spec.width, spec.height)))
        ds.manifest.append((-1, ann.image_id, b))
    return ds


def extract_line_windows(img: Image, ann: Annotation, negatives_per_positive: int = 2, seed: int = 0,
                         hp: HogParams = HogParams()) -> PatchDataset:
    """HOG-ready windows: annotated lines as positives, line-shaped random crops as negatives."""
    rng = np.random.default_rng(seed)
    gray = to_grayscale(img)
    ds = PatchDataset()
    if not ann.boxes:
        return ds
    for b in ann.boxes:
        ds.positives.append(normalize_line_window(crop(gray, b), hp))
        ds.manifest.append((1, ann.image_id, b))
    sizes = [(b.w, b.h) for b in ann.boxes]
    neg, failures = sample_negative_boxes(rng, img.width, img.height, ann.boxes, sizes,
                                          negatives_per_positive * len(ann.boxes))
    ds.warnings += failures
    for b in neg:
        ds.negatives.append(normalize_line_window(crop(gray, b), hp))
        ds.manifest.append((-1, ann.image_id, b))
    return ds


def write_patch_dir(directory, ds: PatchDataset) -> None:
    directory = Path(directory)
    (directory / "pos").mkdir(parents=True, exist_ok=True)
    (directory / "neg").mkdir(parents=True, exist_ok=True)
    for k, p in enumerate(ds.positives):
        write_image(directory / "pos" / f"{k:06d}.pgm", Image(p))
    for k, p in enumerate(ds.negatives):
        write_image(directory / "neg" / f"{k:06d}.pgm", Image(p))
    lines = [f"{label:+d} {iid} {b.x} {b.y} {b.w} {b.h}\n" for label, iid, b in ds.manifest]
    atomic_write(directory / "manifest.txt", "".join(lines).encode("utf-8"))


def read_patch_dir(directory) -> tuple[list[np.ndarray], list[np.ndarray]]:
    directory = Path(directory)
    pos = [read_image(p).data[:, :, 0] for p in sorted((directory / "pos").glob("*.pgm"))]
    neg = [read_image(p).data[:, :, 0] for p in sorted((directory / "neg").glob("*.pgm"))]
    return pos, neg


# --- synthetic scenes ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    width: int = 320
    height: int = 200
    lines: tuple[int, int] = (1, 3)
    glyphs_per_line: tuple[int, int] = (3, 6)
    glyph_height: tuple[int, int] = (16, 28)
    stroke_width: tuple[int, int] = (3, 5)
    glyph_complexity: int = 3  # maximum stroke segments per glyph
    background: str = "mixed"  # flat | gradient | noise | mixed
    distractors: tuple[int, int] = (0, 3)
    noise: float = 3.0
    seed: int = 0

    def __post_init__(self):
        for name in ("lines", "glyphs_per_line", "glyph_height", "stroke_width", "distractors"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name} range is empty")
        if self.background not in ("flat", "gradient", "noise", "mixed"):
            raise ValueError(f"unknown background kind {self.background!r}")
        if self.glyph_complexity < 1:
            raise ValueError("glyph_complexity must be >= 1")


@dataclass
class SyntheticScene:
    image: Image
    annotation: Annotation
    glyphs: list[BoundingBox]
    line_glyphs: list[list[BoundingBox]]
    stroke_widths: list[int]
    glyph_masks: list[np.ndarray]


# rendered glyphs must clear the default gates by this much so pipeline misses are pipeline bugs
_GLYPH_GATES = GeometricThresholds(aspect_ratio_min=0.2, aspect_ratio_max=5.0, eccentricity_max=0.98,
                                   solidity_min=0.35, extent_min=0.25, extent_max=0.9,
                                   euler_min=-2, stroke_cv_max=0.4)


def _thick_polyline(h, w, points, radius):
    yy, xx = np.mgrid[0:h, 0:w]
    mask = np.zeros((h, w), dtype=bool)
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        dx, dy = x1 - x0, y1 - y0
        seg2 = dx * dx + dy * dy
        t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / seg2, 0, 1) if seg2 > 0 else 0.0
        d2 = (xx - x0 - t * dx) ** 2 + (yy - y0 - t * dy) ** 2
        mask |= d2 <= radius * radius
    return mask


def render_glyph(rng, height, stroke, complexity, tries=100):
    """A connected pseudo-glyph mask whose tight box is ``height`` tall."""
    radius = stroke / 2.0
    for _ in range(tries):
        width = max(stroke + 2, int(round(height * rng.uniform(0.45, 0.9))))
        k = int(rng.integers(2, complexity + 2))
        xs, ys = rng.uniform(0, 1, k), rng.uniform(0, 1, k)
        if np.ptp(ys) < 0.3 or np.ptp(xs) < 0.2:
            continue
        inset = radius - 0.5
        ys = inset + (ys - ys.min()) / np.ptp(ys) * (height - 1 - 2 * inset)
        xs = inset + (xs - xs.min()) / np.ptp(xs) * (width - 1 - 2 * inset)
        mask = _thick_polyline(height, width, list(zip(xs, ys)), radius)
        rows, cols = np.flatnonzero(mask.any(1)), np.flatnonzero(mask.any(0))
        mask = mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        if mask.shape[0] != height:
            continue
        if ndimage.label(mask)[1] != 1:
            continue
        if _GLYPH_GATES.passes(compute_features(mask)):
            return mask
    raise RuntimeError("could not render a glyph satisfying the geometric gates")


def _render_line(rng, cfg: SynthConfig):
    base = int(rng.integers(cfg.glyph_height[0], cfg.glyph_height[1] + 1))
    stroke = int(rng.integers(cfg.stroke_width[0], cfg.stroke_width[1] + 1))
    n = int(rng.integers(cfg.glyphs_per_line[0], cfg.glyphs_per_line[1] + 1))
    glyphs = []
    x_right = 0.0
    for _ in range(n):
        h = max(stroke * 3, int(round(base * rng.uniform(0.85, 1.1))))
        mask = render_glyph(rng, h, stroke, cfg.glyph_complexity)
        cy = base * rng.uniform(-0.12, 0.12)
        gap = base * rng.uniform(0.15, 0.45)
        x_left = x_right - gap - mask.shape[1] if glyphs else -mask.shape[1]
        glyphs.append((mask, int(round(x_left)), int(round(cy - h / 2.0))))
        x_right = x_left
    x0 = min(g[1] for g in glyphs)
    y0 = min(g[2] for g in glyphs)
    placed = [(m, x - x0, y - y0) for m, x, y in glyphs]
    lw = max(x + m.shape[1] for m, x, y in placed)
    lh = max(y + m.shape[0] for m, x, y in placed)
    boxes = [BoundingBox(x, y, m.shape[1], m.shape[0]) for m, x, y in placed]
    for a, b in zip(boxes[:-1], boxes[1:]):
        if not linkable(a, b):
            raise AssertionError("adjacent glyphs must satisfy the linking rule")
    return placed, lw, lh, stroke


def _background(rng, cfg: SynthConfig, kind):
    h, w = cfg.height, cfg.width
    base = rng.uniform(60, 200, 3)
    canvas = np.broadcast_to(base, (h, w, 3)).astype(np.float64).copy()
    if kind == "gradient":
        ramp = np.linspace(-1, 1, w if rng.random() < 0.5 else h)
        amp = rng.uniform(15, 35)
        canvas += (ramp[None, :, None] if ramp.size == w else ramp[:, None, None]) * amp
    elif kind == "noise":
        tex = ndimage.gaussian_filter(rng.normal(size=(h, w)), sigma=rng.uniform(3, 6))
        tex /= tex.std() + 1e-12
        canvas += tex[:, :, None] * rng.uniform(8, 18)
    return canvas


def _contrasting_color(rng, bg_luma):
    for _ in range(100):
        c = rng.uniform(0, 255, 3)
        luma = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
        if abs(luma - bg_luma) >= 90:
            return c
    return np.full(3, 0.0 if bg_luma > 127 else 255.0)


def _distractor_mask(rng, size):
    kind = rng.integers(3)
    yy, xx = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2.0
    if kind == 0:  # disc
        return (xx - c) ** 2 + (yy - c) ** 2 <= c * c
    if kind == 1:  # filled rectangle
        m = np.zeros((size, size), bool)
        m[:, : max(2, int(size * rng.uniform(0.3, 1.0)))] = True
        return m
    m = np.zeros((size, size), bool)  # thin bar
    m[int(c) - 1:int(c) + 1, :] = True
    return m


def render_scene(cfg: SynthConfig) -> SyntheticScene:
    rng = np.random.default_rng(cfg.seed)
    kinds = ("flat", "gradient", "noise")
    kind = kinds[int(rng.integers(3))] if cfg.background == "mixed" else cfg.background
    canvas = _background(rng, cfg, kind)
    bg_luma = float(np.mean(canvas @ np.array([0.299, 0.587, 0.114])))
    occupied: list[BoundingBox] = []
    margin = 3

    def place(w, h, padx, pady):
        if w + 2 * margin > cfg.width or h + 2 * margin > cfg.height:
            return None
        for _ in range(200):
            x = int(rng.integers(margin, cfg.width - w - margin + 1))
            y = int(rng.integers(margin, cfg.height - h - margin + 1))
            box = BoundingBox(x, y, w, h)
            grown = BoundingBox(x - padx, y - pady, w + 2 * padx, h + 2 * pady)
            if all(overlap_ratio(grown, o) == 0 for o in occupied):
                return box
        return None

    line_boxes, line_glyphs, glyph_masks, strokes = [], [], [], []
    n_lines = int(rng.integers(cfg.lines[0], cfg.lines[1] + 1))
    for _ in range(n_lines):
        placed, lw, lh, stroke = _render_line(rng, cfg)
        # lines side by side must sit beyond twice the tallest glyph
        box = place(lw, lh, padx=int(2.2 * cfg.glyph_height[1]) + 2, pady=4)
        if box is None:
            continue
        color = _contrasting_color(rng, bg_luma)
        glyph_boxes = []
        for m, gx, gy in placed:
            x, y = box.x + gx, box.y + gy
            canvas[y:y + m.shape[0], x:x + m.shape[1]][m] = color
            glyph_boxes.append(BoundingBox(x, y, m.shape[1], m.shape[0]))
            glyph_masks.append(m)
            strokes.append(stroke)
        occupied.append(box)
        line_boxes.append(box)
        line_glyphs.append(glyph_boxes)
    for _ in range(int(rng.integers(cfg.distractors[0], cfg.distractors[1] + 1))):
        size = int(rng.integers(10, 30))
        box = place(size, size, padx=max(8, cfg.glyph_height[1]), pady=max(8, cfg.glyph_height[1]))
        if box is None:
            continue
        m = _distractor_mask(rng, size)
        canvas[box.y:box.y2, box.x:box.x2][m] = _contrasting_color(rng, bg_luma)
        occupied.append(box)
    if cfg.noise > 0:
        canvas += rng.normal(scale=cfg.noise, size=canvas.shape)
    img = Image(to_uint8(canvas))
    ann = Annotation(f"seed{cfg.seed}", line_boxes)
    glyphs = [g for line in line_glyphs for g in line]
    # lines must not link to each other: that would make the scene unsolvable
    for i, a in enumerate(line_glyphs):
        for b in line_glyphs[i + 1:]:
            if any(linkable(p, q) for p in a for q in b):
                raise AssertionError("glyphs of different lines satisfy the linking rule")
    return SyntheticScene(img, ann, glyphs, line_glyphs, strokes, glyph_masks)


def generate_synthetic_scene(cfg: SynthConfig) -> tuple[Image, Annotation]:
    scene = render_scene(cfg)
    return scene.image, scene.annotation


def scene_seed(corpus_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([corpus_seed, index]).generate_state(1)[0])


def write_corpus(root, count: int, seed: int = 0, test_count: int = 0,
                 base: SynthConfig = SynthConfig()) -> list[str]:
    """Render ``count`` scenes into the corpus layout; the last ``test_count`` form the test split."""
    root = Path(root)
    for sub in ("images", "gt", "chars"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    ids = []
    for i in range(count):
        iid = f"scene_{i:04d}"
        cfg = SynthConfig(**{**base.__dict__, "seed": scene_seed(seed, i)})
        scene = render_scene(cfg)
        atomic_write(root / "images" / f"{iid}.ppm", encode_image(scene.image))
        save_annotation(root / "gt" / f"{iid}.txt", Annotation(iid, scene.annotation.boxes))
        save_annotation(root / "chars" / f"{iid}.txt", Annotation(iid, scene.glyphs))
        ids.append(iid)
    split = count - test_count
    write_manifest(root / "train.txt", ids[:split])
    write_manifest(root / "test.txt", ids[split:])
    return ids

