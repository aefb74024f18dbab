"""Region and line gates: geometric heuristics, patch SVM and HOG line SVM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hog import HogParams, hog_descriptor, normalize_line_window
from .imaging import BoundingBox, Image, crop, resize_bilinear, to_grayscale
from .region_features import GeometricFeatures
from .svm import SvmModel, decision_values


@dataclass(frozen=True)
class GeometricThresholds:
    aspect_ratio_min: float = 0.1
    aspect_ratio_max: float = 10.0
    eccentricity_max: float = 0.995
    solidity_min: float = 0.3
    extent_min: float = 0.2
    extent_max: float = 0.95
    euler_min: int = -4
    stroke_cv_max: float = 0.5

    def __post_init__(self):
        if self.aspect_ratio_min > self.aspect_ratio_max:
            raise ValueError("aspect_ratio_min exceeds aspect_ratio_max")
        if self.extent_min > self.extent_max:
            raise ValueError("extent_min exceeds extent_max")

    def passes(self, f: GeometricFeatures) -> bool:
        return (self.aspect_ratio_min <= f.aspect_ratio <= self.aspect_ratio_max
                and f.eccentricity <= self.eccentricity_max
                and f.solidity >= self.solidity_min
                and self.extent_min <= f.extent <= self.extent_max
                and f.euler_number >= self.euler_min
                and f.stroke_width_cv <= self.stroke_cv_max)

    def within(self, other: "GeometricThresholds") -> bool:
        """True when every gate of ``self`` is at least as strict as ``other``'s."""
        return (self.aspect_ratio_min >= other.aspect_ratio_min
                and self.aspect_ratio_max <= other.aspect_ratio_max
                and self.eccentricity_max <= other.eccentricity_max
                and self.solidity_min >= other.solidity_min
                and self.extent_min >= other.extent_min
                and self.extent_max <= other.extent_max
                and self.euler_min >= other.euler_min
                and self.stroke_cv_max <= other.stroke_cv_max)


@dataclass(frozen=True)
class PatchSpec:
    width: int = 42
    height: int = 46

    @property
    def length(self) -> int:
        return self.width * self.height


def geometric_filter(items, th: GeometricThresholds = GeometricThresholds()) -> list:
    """Keep the ``(region, features)`` pairs whose features pass every gate."""
    return [item for item in items if th.passes(item[1])]


def standardize(values: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance; a constant input maps to zeros."""
    v = np.asarray(values, dtype=np.float64).ravel()
    sd = v.std()
    if sd < 1e-12:
        return np.zeros_like(v)
    return (v - v.mean()) / sd


def patch_vector(gray_crop, spec: PatchSpec = PatchSpec()) -> np.ndarray:
    return standardize(resize_bilinear(gray_crop, spec.width, spec.height))


def extract_patch(img, box, spec: PatchSpec = PatchSpec()) -> np.ndarray:
    """Standardized 42x46 grayscale patch of a region's (or box's) bounds, raster order."""
    box = box if isinstance(box, BoundingBox) else box.bbox
    gray = to_grayscale(img) if isinstance(img, Image) else np.asarray(img)
    if not box.within(gray.shape[1], gray.shape[0]):
        raise ValueError(f"box {box} lies outside the {gray.shape[1]}x{gray.shape[0]} image")
    return patch_vector(crop(gray, box), spec)


def patch_svm_filter(img, regions, model: SvmModel, spec: PatchSpec = PatchSpec()) -> list:
    if model.dim != spec.length:
        raise ConfigError(f"patch model expects {model.dim} features, patch spec gives {spec.length}")
    regions = list(regions)
    if not regions:
        return []
    gray = to_grayscale(img) if isinstance(img, Image) else np.asarray(img)
    feats = np.stack([extract_patch(gray, r, spec) for r in regions])
    scores = decision_values(model, feats)
    return [r for r, s in zip(regions, scores) if s > 0]


def line_descriptor(gray, box: BoundingBox, hp: HogParams = HogParams()) -> np.ndarray:
    return hog_descriptor(normalize_line_window(crop(gray, box), hp), hp)


def line_svm_filter(img, lines, model: SvmModel, hp: HogParams = HogParams()) -> list:
    if model.dim != hp.length:
        raise ConfigError(f"line model expects {model.dim} features, HOG params give {hp.length}")
    lines = list(lines)
    if not lines:
        return []
    gray = to_grayscale(img) if isinstance(img, Image) else np.asarray(img)
    feats = np.stack([line_descriptor(gray, ln.bbox, hp) for ln in lines])
    scores = decision_values(model, feats)
    return [ln for ln, s in zip(lines, scores) if s > 0]
