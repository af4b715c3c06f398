"""Pipeline configuration: typed sections, INI files, dotted overrides.

A config file is INI-style with one section per pipeline stage. Every key
is optional (defaults apply), but unknown sections or keys are rejected
outright so typos fail loudly instead of silently running defaults.
Serialization is canonical: parse(serialize(c)) == c.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

__all__ = [
    "SlicSection",
    "DensitySection",
    "RankingSection",
    "FixationSection",
    "FusionSection",
    "MetricsSection",
    "IoSection",
    "PipelineConfig",
    "default_config",
    "parse_ini",
    "load_config",
    "to_ini",
    "apply_overrides",
    "config_as_dict",
]


@dataclass(frozen=True)
class SlicSection:
    k: int = 300
    compactness: float = 10.0

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"slic.k must be at least 2, got {self.k}")
        if self.compactness <= 0:
            raise ValueError(f"slic.compactness must be positive, got {self.compactness}")


@dataclass(frozen=True)
class DensitySection:
    radii: tuple[int, ...] = (1, 2, 3, 5, 7, 10, 14)
    bins: int = 16
    regions: int = 8

    def __post_init__(self) -> None:
        object.__setattr__(self, "radii", tuple(int(r) for r in self.radii))
        if len(self.radii) < 2:
            raise ValueError("density.radii needs at least 2 entries")
        if any(r < 1 for r in self.radii):
            raise ValueError(f"density.radii must be positive, got {self.radii}")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError(f"density.radii must be strictly increasing, got {self.radii}")
        if self.bins < 1:
            raise ValueError(f"density.bins must be positive, got {self.bins}")
        if self.regions < 1:
            raise ValueError(f"density.regions must be positive, got {self.regions}")


@dataclass(frozen=True)
class RankingSection:
    alpha: float = 0.99
    sigma2: float = 0.1
    seeds_from_fixation: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"ranking.alpha must lie in (0, 1), got {self.alpha}")
        if self.sigma2 <= 0:
            raise ValueError(f"ranking.sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class FixationSection:
    resize: int = 64
    sigma_frac: float = 0.045
    pool_keep_background: bool = False

    def __post_init__(self) -> None:
        if self.resize < 1:
            raise ValueError(f"fixation.resize must be positive, got {self.resize}")
        if self.sigma_frac <= 0:
            raise ValueError(f"fixation.sigma_frac must be positive, got {self.sigma_frac}")


@dataclass(frozen=True)
class FusionSection:
    mn_thresh: float = 0.1
    mn_neighborhood: int = 8
    mn_exclude_global: bool = False

    def __post_init__(self) -> None:
        if self.mn_thresh < 0:
            raise ValueError(f"fusion.mn_thresh must be non-negative, got {self.mn_thresh}")
        if self.mn_neighborhood not in (4, 8):
            raise ValueError(
                f"fusion.mn_neighborhood must be 4 or 8, got {self.mn_neighborhood}"
            )


@dataclass(frozen=True)
class MetricsSection:
    beta2: float = 0.3
    s_alpha: float = 0.5

    def __post_init__(self) -> None:
        if self.beta2 <= 0:
            raise ValueError(f"metrics.beta2 must be positive, got {self.beta2}")
        if not 0.0 <= self.s_alpha <= 1.0:
            raise ValueError(f"metrics.s_alpha must lie in [0, 1], got {self.s_alpha}")


@dataclass(frozen=True)
class IoSection:
    dump_stages: bool = False
    max_dim: int = 0  # 0 keeps the native resolution

    def __post_init__(self) -> None:
        if self.max_dim < 0:
            raise ValueError(f"io.max_dim must be non-negative, got {self.max_dim}")


@dataclass(frozen=True)
class PipelineConfig:
    slic: SlicSection = field(default_factory=SlicSection)
    density: DensitySection = field(default_factory=DensitySection)
    ranking: RankingSection = field(default_factory=RankingSection)
    fixation: FixationSection = field(default_factory=FixationSection)
    fusion: FusionSection = field(default_factory=FusionSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    io: IoSection = field(default_factory=IoSection)


def default_config() -> PipelineConfig:
    return PipelineConfig()


def _parse_value(raw: str, current: object, key: str) -> object:
    if isinstance(current, bool):
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(current, int):
        try:
            return int(raw.strip())
        except ValueError as exc:
            raise ValueError(f"{key}: expected an integer, got {raw!r}") from exc
    if isinstance(current, float):
        try:
            return float(raw.strip())
        except ValueError as exc:
            raise ValueError(f"{key}: expected a number, got {raw!r}") from exc
    if isinstance(current, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        try:
            return tuple(int(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"{key}: expected integers, got {raw!r}") from exc
    raise AssertionError(f"unhandled config type for {key}")


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(config: PipelineConfig, overrides: dict[str, str]) -> PipelineConfig:
    """Apply dotted ``section.key`` string overrides; unknown keys fail."""
    sections = {f.name: getattr(config, f.name) for f in fields(config)}
    for dotted, raw in overrides.items():
        if "." not in dotted:
            raise ValueError(f"override {dotted!r} is not of the form section.key")
        sec_name, key = dotted.split(".", 1)
        if sec_name not in sections:
            raise ValueError(f"unknown config section {sec_name!r}")
        section = sections[sec_name]
        if key not in {f.name for f in fields(section)}:
            raise ValueError(f"unknown config key {dotted!r}")
        value = _parse_value(raw, getattr(section, key), dotted)
        sections[sec_name] = replace(section, **{key: value})
    return PipelineConfig(**sections)


def parse_ini(text: str) -> PipelineConfig:
    """Parse an INI document on top of the defaults, strictly."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from exc
    overrides: dict[str, str] = {}
    known = {f.name for f in fields(PipelineConfig)}
    for sec_name in parser.sections():
        if sec_name not in known:
            raise ValueError(f"unknown config section {sec_name!r}")
        for key, raw in parser.items(sec_name):
            overrides[f"{sec_name}.{key}"] = raw
    if parser.defaults():
        stray = ", ".join(parser.defaults())
        raise ValueError(f"keys outside any section: {stray}")
    return apply_overrides(default_config(), overrides)


def load_config(path: str) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_ini(fh.read())


def to_ini(config: PipelineConfig) -> str:
    """Canonical INI serialization (fixed section and key order)."""
    out = io.StringIO()
    for sec_field in fields(config):
        section = getattr(config, sec_field.name)
        out.write(f"[{sec_field.name}]\n")
        for f in fields(section):
            out.write(f"{f.name} = {_format_value(getattr(section, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def config_as_dict(config: PipelineConfig) -> dict:
    """Plain nested dict view, e.g. for the report's config echo."""
    doc: dict[str, dict[str, object]] = {}
    for sec_field in fields(config):
        section = getattr(config, sec_field.name)
        doc[sec_field.name] = {
            f.name: (list(v) if isinstance(v := getattr(section, f.name), tuple) else v)
            for f in fields(section)
        }
    return doc
