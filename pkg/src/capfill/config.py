"""Pipeline configuration: flat `key = value` files plus CLI overrides.

The file format is deliberately plain (one assignment per line, `#`
comments) so configs diff well and work from any tooling. Command-line
flags always win over file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ParseError, SchemaError
from .templatize import DEFAULT_RELATION_WHITELIST


@dataclass
class PipelineConfig:
    window_days: int = 7
    tag_freq_cap: int = 200
    top_k: int = 5
    relation_whitelist: frozenset[str] = DEFAULT_RELATION_WHITELIST
    allow_duplicates: bool = True
    beam_width: Optional[int] = None    # None = exhaustive search
    min_caption_tokens: int = 10
    fuzzy_threshold: float = 0.5
    jobs: int = 1

    def validate(self) -> None:
        positive = ["tag_freq_cap", "top_k", "min_caption_tokens", "jobs"]
        for name in positive:
            if getattr(self, name) < 1:
                raise SchemaError(f"config {name} must be >= 1")
        if self.window_days < 0:
            raise SchemaError("config window_days must be >= 0")
        if self.beam_width is not None and self.beam_width < 1:
            raise SchemaError("config beam_width must be >= 1")
        if not 0.0 < self.fuzzy_threshold <= 1.0:
            raise SchemaError("config fuzzy_threshold must be in (0, 1]")
        if not self.relation_whitelist:
            raise SchemaError("config relation_whitelist must not be empty")


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def load_config(path) -> PipelineConfig:
    """Parse a key = value config file into a PipelineConfig."""
    known = {f.name for f in fields(PipelineConfig)}
    config = PipelineConfig()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            key, sep, value = body.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not key:
                raise ParseError("expected `key = value`", path=path, line=lineno)
            if key not in known:
                raise ParseError(f"unknown config key {key!r}", path=path, line=lineno)
            try:
                apply_setting(config, key, value)
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=lineno) from None
    config.validate()
    return config


def apply_setting(config: PipelineConfig, key: str, value: str) -> None:
    if key == "relation_whitelist":
        labels = [t for t in value.replace(",", " ").split() if t]
        config.relation_whitelist = frozenset(label.casefold() for label in labels)
    elif key == "allow_duplicates":
        config.allow_duplicates = _parse_bool(value)
    elif key == "beam_width":
        config.beam_width = None if value.lower() in ("", "none", "unset") else int(value)
    elif key == "fuzzy_threshold":
        config.fuzzy_threshold = float(value)
    elif key in ("window_days", "tag_freq_cap", "top_k", "min_caption_tokens", "jobs"):
        setattr(config, key, int(value))
    else:
        raise ValueError(f"unknown config key {key!r}")
