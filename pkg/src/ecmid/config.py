"""Flat ``key=value`` configuration shared by the CLI commands.

Every key is optional.  Precedence is command-line flag, then config file,
then the built-in default; :func:`resolve` records which one won.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Optional

from .dataset import DEFAULT_COLUMNS, WindowPolicy
from .errors import EcmError
from .optimize import DEFAULT_BOUNDS, GaConfig, LsConfig, PsoConfig, SaConfig, SearchSpace
from .optimize.problem import CIRCUIT_NAMES, DEFAULT_OCV_DEGREE


class ConfigError(EcmError):
    """Unknown key or unparseable value."""


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


_SECTIONS = {"pso": PsoConfig, "sa": SaConfig, "ga": GaConfig, "ls": LsConfig}
_ALIASES = {"pso.c1": "pso.cognitive", "pso.c2": "pso.social"}

DEFAULTS: dict[str, Any] = {}
_TYPES: dict[str, Any] = {}

for _prefix, _cls in _SECTIONS.items():
    for _f in dataclasses.fields(_cls):
        if _f.name == "x0":
            continue
        DEFAULTS[f"{_prefix}.{_f.name}"] = _f.default
        _TYPES[f"{_prefix}.{_f.name}"] = int if isinstance(_f.default, int) else float
for _name in CIRCUIT_NAMES:
    DEFAULTS[f"bounds.{_name}.lo"], DEFAULTS[f"bounds.{_name}.hi"] = DEFAULT_BOUNDS[_name]
    _TYPES[f"bounds.{_name}.lo"] = _TYPES[f"bounds.{_name}.hi"] = float
for _field, _header in DEFAULT_COLUMNS.items():
    DEFAULTS[f"col.{_field}"] = _header
    _TYPES[f"col.{_field}"] = str
DEFAULTS.update(
    {
        "window.onset": WindowPolicy.onset_threshold,
        "window.length": WindowPolicy.window_length,
        "window.dt": 1.0,
        "cell.capacity": None,
        "cell.soc_init": 1.0,
        "ocv.degree": DEFAULT_OCV_DEGREE,
        "invert_current": False,
    }
)
_TYPES.update(
    {
        "window.onset": float,
        "window.length": float,
        "window.dt": float,
        "cell.capacity": float,
        "cell.soc_init": float,
        "ocv.degree": int,
        "invert_current": _bool,
    }
)


def parse_pairs(text: str, origin: str = "config") -> dict[str, str]:
    """Split ``key=value`` lines; ``#`` starts a comment."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{origin}:{lineno}: expected key=value, got {raw.strip()!r}")
        pairs[key.strip()] = value.strip()
    return pairs


def coerce(key: str, value: Any) -> Any:
    key = _ALIASES.get(key, key)
    if key not in _TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    if not isinstance(value, str):
        return value
    try:
        return _TYPES[key](value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def load(path) -> dict[str, Any]:
    pairs = parse_pairs(Path(path).read_text(), str(path))
    return {_ALIASES.get(k, k): coerce(k, v) for k, v in pairs.items()}


@dataclasses.dataclass
class Settings:
    values: dict[str, Any]
    sources: dict[str, str]

    def __getitem__(self, key):
        return self.values[key]

    def describe(self) -> list[str]:
        return [f"{k} = {self.values[k]!r} ({self.sources[k]})" for k in sorted(self.values)]

    def method_config(self, method: str):
        cls = _SECTIONS[method]
        kwargs = {
            f.name: self.values[f"{method}.{f.name}"] for f in dataclasses.fields(cls) if f.name != "x0"
        }
        return cls(**kwargs)

    def search_space(self) -> SearchSpace:
        return SearchSpace(
            tuple(self.values[f"bounds.{n}.lo"] for n in CIRCUIT_NAMES),
            tuple(self.values[f"bounds.{n}.hi"] for n in CIRCUIT_NAMES),
        )

    def window_policy(self) -> WindowPolicy:
        return WindowPolicy(self.values["window.onset"], self.values["window.length"])

    def column_map(self) -> dict[str, str]:
        return {f: self.values[f"col.{f}"] for f in DEFAULT_COLUMNS}


def resolve(config_path: Optional[str] = None, overrides: Optional[dict] = None) -> Settings:
    values = dict(DEFAULTS)
    sources = {k: "default" for k in values}
    if config_path:
        for key, value in load(config_path).items():
            values[key] = value
            sources[key] = f"config {config_path}"
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = _ALIASES.get(key, key)
        values[key] = coerce(key, value)
        sources[key] = "flag"
    return Settings(values, sources)
