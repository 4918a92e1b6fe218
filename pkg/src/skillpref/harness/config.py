"""Flat key = value run configuration files.

Every key mirrors a RunConfig field, so the RunConfig dataclass is the
whole schema and any two config files diff cleanly. Lines starting
with '#' (or trailing '# ...' fragments) are comments.
Unknown and duplicate keys are errors, not warnings.
"""

from __future__ import annotations

import typing
from dataclasses import fields
from pathlib import Path

from skillpref.training import RunConfig


class ConfigError(ValueError):
    """Malformed config text, unknown key, or invalid field value."""


_TYPES = typing.get_type_hints(RunConfig)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(key: str, text: str):
    typ = _TYPES[key]
    try:
        if typ is bool:
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        if typ is str:
            return text
        if typing.get_origin(typ) is tuple:
            return tuple(int(p) for p in text.split(",") if p)
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {text!r}") from e
    raise ConfigError(f"unsupported field type for {key}")


def serialize_config(config: RunConfig) -> str:
    lines = [
        f"{f.name} = {_format_value(getattr(config, f.name))}"
        for f in fields(RunConfig)
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value.strip())
    try:
        return RunConfig(**values)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text())


def save_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(serialize_config(config))
