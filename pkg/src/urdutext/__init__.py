"""Urdu scene-text detection: channel-enhanced MSER, geometric and SVM filtering,
centroid-rule character linking and HOG line verification."""

from .config import DetectorConfig, parse_config
from .imaging import BoundingBox, Image, decode_image, encode_image
from .pipeline_eval import DetectorModels, detect, overlap_ratio

__all__ = [
    "BoundingBox",
    "DetectorConfig",
    "DetectorModels",
    "Image",
    "decode_image",
    "detect",
    "encode_image",
    "overlap_ratio",
    "parse_config",
]
__version__ = "0.1.0"
