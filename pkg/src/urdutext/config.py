"""Flat ``section.key = value`` detector configuration.

Unknown keys and unparsable values are rejected. Omitted keys keep their
defaults, so an empty file is a valid configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .filtering import GeometricThresholds, PatchSpec
from .hog import HogParams
from .linking import LinkParams
from .mser import MserParams

SECTIONS = {
    "mser": MserParams,
    "geometric": GeometricThresholds,
    "patch": PatchSpec,
    "hog": HogParams,
    "linking": LinkParams,
}


@dataclass(frozen=True)
class DetectorConfig:
    mser: MserParams = field(default_factory=MserParams)
    geometric: GeometricThresholds = field(default_factory=GeometricThresholds)
    patch: PatchSpec = field(default_factory=PatchSpec)
    hog: HogParams = field(default_factory=HogParams)
    linking: LinkParams = field(default_factory=LinkParams)


def _field_types(cls):
    return {f.name: type(getattr(cls(), f.name)) for f in fields(cls)}


def parse_config(text: str) -> DetectorConfig:
    overrides: dict[str, dict] = {name: {} for name in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        types = _field_types(SECTIONS[section])
        if name not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            overrides[section][name] = types[name](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    cfg = DetectorConfig()
    try:
        parts = {name: replace(getattr(cfg, name), **vals) for name, vals in overrides.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return DetectorConfig(**parts)


def format_config(cfg: DetectorConfig) -> str:
    lines = []
    for section in SECTIONS:
        obj = getattr(cfg, section)
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {getattr(obj, f.name)}")
    return "\n".join(lines) + "\n"


def read_config(path) -> DetectorConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
