"""Pipeline configuration stored as an INI-style key/value file.

Every tunable default lives here, including the tracker thresholds
(0.7 / 0.7 / 0.75 / 20 / 0.8), the 2048x128 grid and the +/-22.5 degree
vertical field of view.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .lidar_frame import DEFAULT_RANGE_SCALE_MM
from .sri_projection import NormalizationConfig, ProjectionConfig
from .tracker import TrackerConfig

CONFIG_ENV = "LICAR_CONFIG"


@dataclass(frozen=True)
class TimingConfig:
    warmup: int = 5
    repetitions: int = 100

    def __post_init__(self):
        if self.warmup < 0 or self.repetitions < 1:
            raise ValueError("warmup must be >= 0 and repetitions >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    timing: TimingConfig = field(default_factory=TimingConfig)
    range_scale_mm: int = DEFAULT_RANGE_SCALE_MM
    io: dict = field(default_factory=dict)


_SECTIONS = {
    "projection": ProjectionConfig,
    "normalization": NormalizationConfig,
    "tracker": TrackerConfig,
    "timing": TimingConfig,
}


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, f: dataclasses.Field, default):
    raw = raw.strip()
    if f.name == "channel_order":
        return tuple(s.strip() for s in raw.split(","))
    if raw.lower() == "none":
        return None
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int) or f.name == "wrap_width":
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def dumps(cfg: PipelineConfig) -> str:
    parser = configparser.ConfigParser()
    parser["frame"] = {"range_scale_mm": str(cfg.range_scale_mm)}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        parser[name] = {f.name: _format(getattr(section, f.name)) for f in dataclasses.fields(section)}
    parser["io"] = {k: str(v) for k, v in sorted(cfg.io.items())}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def loads(text: str) -> PipelineConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(parser.sections()) - set(_SECTIONS) - {"frame", "io"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    try:
        for name, cls in _SECTIONS.items():
            if not parser.has_section(name):
                continue
            fields = {f.name: f for f in dataclasses.fields(cls)}
            defaults = cls()
            values = {}
            for key, raw in parser[name].items():
                if key not in fields:
                    raise ConfigError(f"unknown key {name}.{key}")
                values[key] = _parse(raw, fields[key], getattr(defaults, key))
            kwargs[name] = cls(**values)
        if parser.has_section("frame"):
            kwargs["range_scale_mm"] = parser["frame"].getint("range_scale_mm", DEFAULT_RANGE_SCALE_MM)
        if parser.has_section("io"):
            kwargs["io"] = dict(parser["io"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return PipelineConfig(**kwargs)


def load_config(path=None) -> PipelineConfig:
    """Read ``path``, else the file named by ``$LICAR_CONFIG``, else defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return PipelineConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)
