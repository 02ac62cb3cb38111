"""Severity mapping and check thresholds loaded from YAML."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .audit import Category, Check, CheckConfig


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"

    @property
    def rank(self) -> int:
        return _RANK[self]

    def at_least(self, other: "Severity") -> bool:
        return self.rank >= other.rank


_RANK = {Severity.INFO: 0, Severity.WARNING: 1, Severity.ERROR: 2}

_LEVEL = {"enum": [s.value for s in Severity]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "severity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "default": _LEVEL,
                "categories": {
                    "type": "object",
                    "propertyNames": {"enum": [c.value for c in Category]},
                    "additionalProperties": _LEVEL,
                },
                "warnings": _LEVEL,
                "names_with_errors": _LEVEL,
                "checks": {
                    "type": "object",
                    "propertyNames": {"enum": [c.value for c in Check]},
                    "additionalProperties": _LEVEL,
                },
            },
        },
        "checks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_len": {"type": "integer", "minimum": 1},
                "enabled": {"type": "array", "items": {"enum": [c.value for c in Check]}},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    default: Severity = Severity.INFO
    categories: dict[Category, Severity] = field(default_factory=dict)
    warnings: Severity = Severity.WARNING
    names_with_errors: Severity = Severity.WARNING
    checks: dict[Check, Severity] = field(default_factory=dict)
    check_config: CheckConfig = CheckConfig()

    def category(self, cat: Category) -> Severity:
        return self.categories.get(cat, self.default)

    def check(self, check: Check) -> Severity:
        return self.checks.get(check, Severity.WARNING)


def _parse(raw: dict) -> Config:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    sev = raw.get("severity", {})
    return Config(
        default=Severity(sev.get("default", "info")),
        categories={Category(k): Severity(v) for k, v in sev.get("categories", {}).items()},
        warnings=Severity(sev.get("warnings", "warning")),
        names_with_errors=Severity(sev.get("names_with_errors", "warning")),
        checks={Check(k): Severity(v) for k, v in sev.get("checks", {}).items()},
        check_config=CheckConfig.from_mapping(raw.get("checks")),
    )


def default_config_text() -> str:
    return resources.files("xlaudit").joinpath("default_config.yaml").read_text(encoding="utf-8")


def load_config(path: str | Path | None = None) -> Config:
    """Parse a config file, or the shipped defaults when ``path`` is None."""
    text = default_config_text() if path is None else Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    return _parse(raw)
