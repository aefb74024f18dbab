"""Detector orchestration and the overlap-ratio evaluation protocol."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DetectorConfig
from .errors import ConfigError
from .filtering import geometric_filter, line_svm_filter, patch_svm_filter
from .imaging import BoundingBox, Image
from .linking import link_lines
from .mser import channel_enhanced_mser
from .region_features import compute_features
from .svm import SvmModel, predict

STAGES = ("mser", "geometric", "patch_svm", "linking", "line_svm")


@dataclass(frozen=True)
class DetectorModels:
    patch: SvmModel
    line: SvmModel


@dataclass
class DetectionResult:
    image_id: str
    boxes: list[BoundingBox]
    stage: str = "line_svm"
    # per-stage boxes, filled when tracing is requested
    trace: dict[str, list[BoundingBox]] = field(default_factory=dict)


def check_compatible(models: DetectorModels, config: DetectorConfig) -> None:
    """Raise ConfigError when either model's input size disagrees with the config."""
    if models.patch.dim != config.patch.length:
        raise ConfigError(f"patch model has dim {models.patch.dim} but config patch size "
                          f"{config.patch.width}x{config.patch.height} gives {config.patch.length}")
    if models.line.dim != config.hog.length:
        raise ConfigError(f"line model has dim {models.line.dim} but config HOG params give "
                          f"{config.hog.length}")
    hog_tags = [m for m in models.line.metadata if m.startswith("hog ")]
    if hog_tags and hog_tags[0] != config.hog.fingerprint():
        raise ConfigError(f"line model was trained with '{hog_tags[0]}', config has "
                          f"'{config.hog.fingerprint()}'")


def detect(img: Image, models: DetectorModels, config: DetectorConfig = DetectorConfig(),
           image_id: str = "", trace: bool = False) -> DetectionResult:
    """Extraction, geometric gate, patch SVM, linking, line SVM; returns line boxes."""
    check_compatible(models, config)
    stages = {}
    regions = channel_enhanced_mser(img, config.mser)
    stages["mser"] = [r.bbox for r in regions]
    scored = [(r, compute_features(r)) for r in regions]
    kept = [r for r, _ in geometric_filter(scored, config.geometric)]
    stages["geometric"] = [r.bbox for r in kept]
    kept = patch_svm_filter(img, kept, models.patch, config.patch)
    stages["patch_svm"] = [r.bbox for r in kept]
    lines = link_lines(kept, config.linking)
    stages["linking"] = [ln.bbox for ln in lines]
    lines = line_svm_filter(img, lines, models.line, config.hog)
    stages["line_svm"] = [ln.bbox for ln in lines]
    return DetectionResult(image_id, [ln.bbox for ln in lines], "line_svm",
                           stages if trace else {})


# --- evaluation ---------------------------------------------------------------------------

def overlap_ratio(gt: BoundingBox, dt: BoundingBox) -> float:
    """Intersection area over union area of two axis-aligned boxes."""
    iw = min(gt.x2, dt.x2) - max(gt.x, dt.x)
    ih = min(gt.y2, dt.y2) - max(gt.y, dt.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (gt.area + dt.area - inter)


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    assignment: tuple[tuple[int, int], ...]  # (gt index, dt index) pairs


def match_detections(gts, dts, threshold: float = 0.5) -> MatchResult:
    """Greedy one-to-one matching by descending overlap; a match needs ratio > threshold."""
    gts, dts = list(gts), list(dts)
    pairs = []
    for i, g in enumerate(gts):
        for j, d in enumerate(dts):
            r = overlap_ratio(g, d)
            if r > threshold:
                pairs.append((-r, i, j))
    pairs.sort()
    used_g, used_d = set(), set()
    assignment = []
    for _, i, j in pairs:
        if i in used_g or j in used_d:
            continue
        used_g.add(i)
        used_d.add(j)
        assignment.append((i, j))
    tp = len(assignment)
    return MatchResult(tp, len(dts) - tp, len(gts) - tp, tuple(sorted(assignment)))


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r, f_measure(p, r)


def f_measure(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EvalReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_image: dict[str, MatchResult] = field(default_factory=dict)

    def add(self, image_id: str, m: MatchResult) -> None:
        self.per_image[image_id] = m
        self.tp += m.tp
        self.fp += m.fp
        self.fn += m.fn

    @property
    def precision(self) -> float:
        return prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return prf(self.tp, self.fp, self.fn)[1]

    @property
    def f_measure(self) -> float:
        return prf(self.tp, self.fp, self.fn)[2]


def evaluate(pairs, threshold: float = 0.5) -> EvalReport:
    """``pairs`` yields ``(image_id, gt_boxes, dt_boxes)``."""
    report = EvalReport()
    for image_id, gts, dts in pairs:
        report.add(image_id, match_detections(gts, dts, threshold))
    return report


def classifier_accuracy(model: SvmModel, X, y) -> float:
    """Fraction of samples whose predicted sign matches the +1/-1 label."""
    y = np.asarray(y).ravel()
    if y.size == 0:
        return 0.0
    return float(np.mean(predict(model, X) == y))
