"""
monitor.py - Watches a market file and reports each save
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path
from typing import Callable, Optional

from watchdog.events import FileSystemEventHandler
from watchdog.observers import Observer

log = logging.getLogger("marketclear.monitor")

DEFAULT_DEBOUNCE = 0.5
REPORTED_EVENTS = frozenset({"modified", "created", "deleted", "moved"})


class _ChangeHandler(FileSystemEventHandler):
    def __init__(self, on_event: Callable[[str, str], None]) -> None:
        super().__init__()
        self._on_event = on_event

    def on_any_event(self, event):
        if event.is_directory or event.event_type not in REPORTED_EVENTS:
            return
        # editors that save through a temp file end with a move onto the target
        path = event.dest_path if event.event_type == "moved" else event.src_path
        self._on_event(path, event.event_type)


class MarketFileMonitor:
    """Monitors one market file for changes.

    Attributes
    ----------
    path : Path
    on_change : Callable[[str, str], None] | None
        Called with (file path, change type) once a burst of events has been
        quiet for ``debounce`` seconds; the change type is the last one seen.
    """

    def __init__(self, path: str | Path, debounce: float = DEFAULT_DEBOUNCE) -> None:
        self.path = Path(path).resolve()
        self.debounce = debounce
        self.on_change: Optional[Callable[[str, str], None]] = None

        self._lock = threading.Lock()
        self._timer: Optional[threading.Timer] = None
        self._pending = ""
        self._reported: int = 0
        self._observer: Optional[Observer] = None

    # ── Public properties ─────────────────────────────────────────────────

    @property
    def reported(self) -> int:
        return self._reported

    @property
    def running(self) -> bool:
        return self._observer is not None and self._observer.is_alive()

    # ── Lifecycle ─────────────────────────────────────────────────────────

    def start(self) -> None:
        handler = _ChangeHandler(self._register_change)
        self._observer = Observer()
        # watch the directory: many editors replace the file instead of writing it
        self._observer.schedule(handler, str(self.path.parent), recursive=False)
        self._observer.start()
        log.info("watching %s", self.path)

    def stop(self) -> None:
        with self._lock:
            if self._timer is not None:
                self._timer.cancel()
                self._timer = None
        if self._observer and self._observer.is_alive():
            self._observer.stop()
            self._observer.join()
        self._observer = None

    # ── Change tracking ───────────────────────────────────────────────────

    def _register_change(self, path: str, change_type: str) -> None:
        if Path(path).resolve() != self.path:
            return
        # each event restarts the quiet period; only the last one of a burst is reported
        with self._lock:
            if self._timer is not None:
                self._timer.cancel()
            self._pending = change_type
            self._timer = threading.Timer(self.debounce, self._settle)
            self._timer.daemon = True
            self._timer.start()

    def _settle(self) -> None:
        with self._lock:
            if self._timer is not threading.current_thread():
                return  # superseded or stopped while waiting for the lock
            self._timer = None
            change_type = self._pending
            self._reported += 1

        log.debug("%s %s", change_type, self.path)
        if self.on_change:
            try:
                self.on_change(str(self.path), change_type)
            except Exception:
                log.exception("change callback failed for %s", self.path)
