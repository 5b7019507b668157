"""Drilling run configuration, loaded from YAML."""
from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import yaml

from .model import SchemaError, validate_project_id

log = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 50


class ConfigError(ValueError):
    pass


def _to_timestamp(value) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool):
        raise ConfigError(f"not a timestamp: {value!r}")
    if isinstance(value, (int, float)):
        return int(value)
    if isinstance(value, dt.datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=dt.timezone.utc)
        return int(value.timestamp())
    if isinstance(value, dt.date):
        return int(dt.datetime(value.year, value.month, value.day, tzinfo=dt.timezone.utc).timestamp())
    if isinstance(value, str):
        text = value.strip()
        if text.lstrip("-").isdigit():
            return int(text)
        try:
            return _to_timestamp(dt.datetime.fromisoformat(text))
        except ValueError:
            pass
    raise ConfigError(f"not a timestamp: {value!r}")


@dataclass
class ProjectConfig:
    project_id: str
    repo_path: str
    db_path: str = "repograph.db"
    start_date: Optional[int] = None
    end_date: Optional[int] = None
    batch_size: int = DEFAULT_BATCH_SIZE
    index_source_code: bool = False
    cache_dir: Optional[str] = None

    def __post_init__(self):
        try:
            validate_project_id(self.project_id)
        except SchemaError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.repo_path:
            raise ConfigError("repo_path is required")
        self.start_date = _to_timestamp(self.start_date)
        self.end_date = _to_timestamp(self.end_date)
        if self.start_date is not None and self.end_date is not None and self.start_date > self.end_date:
            raise ConfigError("start_date is after end_date")
        if isinstance(self.batch_size, bool) or not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigError(f"batch_size must be an integer >= 1, got {self.batch_size!r}")
        if not isinstance(self.index_source_code, bool):
            raise ConfigError("index_source_code must be a boolean")

    def in_range(self, timestamp: int) -> bool:
        if self.start_date is not None and timestamp < self.start_date:
            return False
        if self.end_date is not None and timestamp > self.end_date:
            return False
        return True

    def fingerprint(self) -> str:
        from .driller.metrics import METRICS_VERSION

        key = json.dumps([self.project_id, self.index_source_code, METRICS_VERSION])
        return hashlib.sha1(key.encode("utf-8")).hexdigest()

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Optional[Path] = None) -> "ProjectConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        for key in sorted(set(data) - known):
            log.warning("ignoring unknown config key %r", key)
        values = {k: v for k, v in data.items() if k in known}
        for required in ("project_id", "repo_path"):
            if not values.get(required):
                raise ConfigError(f"missing required key {required!r}")
        values["project_id"] = str(values["project_id"])
        if base_dir is not None:
            for key in ("repo_path", "db_path", "cache_dir"):
                if values.get(key) and not os.path.isabs(str(values[key])):
                    values[key] = str(base_dir / str(values[key]))
        for key in ("repo_path", "db_path", "cache_dir"):
            if values.get(key) is not None:
                values[key] = str(values[key])
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ProjectConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
    return ProjectConfig.from_mapping(data, base_dir=path.resolve().parent)
