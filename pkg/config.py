"""
config.py - Persistent configuration management
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any

log = logging.getLogger("marketclear.config")

HOME_ENV = "MARKETCLEAR_HOME"
CONFIG_NAME = "config.json"
MAX_RECENT = 10

DEFAULTS: dict[str, int] = {
    "cap": 10_000,
    "oracle_cap": 8,
    "seed": 42,
    "samples": 25,
}

# keys whose value must be >= 1; "seed" may be any integer
_POSITIVE = {"cap", "oracle_cap", "samples"}


def config_dir() -> Path:
    override = os.environ.get(HOME_ENV)
    return Path(override) if override else Path.home() / ".marketclear"


class ConfigManager:
    """Loads and persists solver defaults and the list of recent market files."""

    def __init__(self, directory: str | Path | None = None) -> None:
        self.directory = Path(directory) if directory else config_dir()
        self.path = self.directory / CONFIG_NAME
        self._data: dict[str, Any] = self._load()

    # ── Internal ──────────────────────────────────────────────────────────

    def _load(self) -> dict[str, Any]:
        data: dict[str, Any] = {"settings": dict(DEFAULTS), "recent": []}
        if not self.path.exists():
            return data
        try:
            stored = json.loads(self.path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            log.warning("ignoring unreadable config %s: %s", self.path, exc)
            return data
        if not isinstance(stored, dict):
            log.warning("ignoring config %s: not a JSON object", self.path)
            return data
        for key, value in (stored.get("settings") or {}).items():
            try:
                data["settings"][key] = self._validate(key, value)
            except ValueError as exc:
                log.warning("ignoring config entry %s: %s", key, exc)
        data["recent"] = [str(p) for p in stored.get("recent") or []][:MAX_RECENT]
        return data

    @staticmethod
    def _validate(key: str, value: Any) -> int:
        if key not in DEFAULTS:
            raise ValueError(f"unknown setting {key!r} (known: {', '.join(DEFAULTS)})")
        if isinstance(value, bool):
            raise ValueError(f"{key} must be an integer")
        try:
            number = int(value)
        except (TypeError, ValueError):
            raise ValueError(f"{key} must be an integer, got {value!r}") from None
        if key in _POSITIVE and number < 1:
            raise ValueError(f"{key} must be at least 1")
        return number

    def save(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(self._data, indent=2, ensure_ascii=False),
            encoding="utf-8",
        )

    # ── Public API ────────────────────────────────────────────────────────

    @property
    def settings(self) -> dict[str, int]:
        return dict(self._data["settings"])

    def get(self, key: str) -> int:
        return self._data["settings"][key]

    def set(self, key: str, value: Any) -> bool:
        """Validate and store a setting. Returns True if it changed."""
        number = self._validate(key, value)
        if self._data["settings"].get(key) == number:
            return False
        self._data["settings"][key] = number
        self.save()
        return True

    @property
    def recent(self) -> list[str]:
        return list(self._data["recent"])

    def remember(self, path: str | Path) -> None:
        """Move a market file to the front of the recent list."""
        norm = str(Path(path).resolve())
        recent = [p for p in self._data["recent"] if p != norm]
        recent.insert(0, norm)
        self._data["recent"] = recent[:MAX_RECENT]
        try:
            self.save()
        except OSError as exc:
            log.warning("could not save config %s: %s", self.path, exc)
