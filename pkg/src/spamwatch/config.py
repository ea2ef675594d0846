"""Run configuration: one JSON document, every tunable with a default.

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


_PATH_KEYS = ("whitelist_path", "store_path", "input", "timelines", "web_spec", "registry")


@dataclass
class Config:
    top_k: int = 15
    window_minutes: int = 60
    whitelist_path: str | None = None
    min_group_size: int = 20
    timeline_depth: int = 200
    alpha: int = 3
    beta: float = 0.6
    max_retry: int = 5
    jobs: list[dict[str, Any]] | None = None
    """``[{"keyword", "interval_hours", "tweets_per_run"}]``; None means the default shorteners."""
    store_path: str = "spamwatch-store.jsonl"
    api_port: int | None = 8080
    """None disables the API; 0 picks a free port."""
    api_host: str = "127.0.0.1"
    input: str | None = None
    timelines: str | None = None
    unavailable_accounts: list[str] = field(default_factory=list)
    web_spec: str | None = None
    registry: str | None = None
    workers: int = 4
    strip_urls_before_hash: bool = False
    exit_when_drained: bool = False
    url_policy: str = "dominant"
    speedup: float | None = None
    """Event seconds per wall second when replaying; None replays as fast as possible."""
    port_file: str | None = None
    """Where to write the bound API port once listening."""

    def __post_init__(self) -> None:
        checks = [
            (self.top_k >= 1, "top_k must be >= 1"),
            (self.window_minutes > 0, "window_minutes must be > 0"),
            (self.min_group_size >= 1, "min_group_size must be >= 1"),
            (1 <= self.timeline_depth <= 200, "timeline_depth must be in 1..200"),
            (self.alpha >= 1, "alpha must be >= 1"),
            (0 < self.beta <= 1, "beta must be in (0, 1]"),
            (self.max_retry >= 0, "max_retry must be >= 0"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.url_policy in ("dominant", "all"), "url_policy must be dominant or all"),
            (self.speedup is None or self.speedup > 0, "speedup must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def from_dict(cls, obj: dict[str, Any], base: Path | None = None) -> Config:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        obj = dict(obj)
        if base is not None:
            for key in _PATH_KEYS:
                if obj.get(key):
                    obj[key] = str((base / obj[key]).resolve()) if not Path(obj[key]).is_absolute() \
                        else obj[key]
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> Config:
        path = Path(path)
        try:
            obj = json.loads(path.read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(obj, path.parent)
