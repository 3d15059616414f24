"""File-backed, versioned cache of structural constants.

The cache is a single JSON file ``constants-v<N>.json`` in the directory
named by ``$CRCENSUS_CACHE_DIR`` (default ``~/.cache/crcensus``).  Keys are
``name|beta|tolerance`` with ``beta`` written as ``-`` for beta-free
constants.  Writes go through a temporary file and an atomic rename.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
from pathlib import Path

CACHE_ENV = "CRCENSUS_CACHE_DIR"
CACHE_SCHEMA = 1

log = logging.getLogger(__name__)


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "crcensus"


def cache_key(name: str, beta: float | None, tolerance: float) -> str:
    b = "-" if beta is None else repr(float(beta))
    return f"{name}|{b}|{float(tolerance)!r}"


class ConstantsCache:
    """Map ``(name, beta, tolerance) -> {"value", "error"}`` persisted as JSON."""

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.path = self.directory / f"constants-v{CACHE_SCHEMA}.json"
        self._lock = threading.Lock()
        self._entries = self._load()
        self.hits = 0
        self.misses = 0

    def _load(self) -> dict:
        if not self.path.exists():
            return {}
        try:
            data = json.loads(self.path.read_text())
            if (not isinstance(data, dict) or data.get("schema") != CACHE_SCHEMA
                    or not isinstance(data.get("entries"), dict)):
                raise ValueError("schema mismatch")
            return data["entries"]
        except (ValueError, OSError) as exc:
            log.warning("constants cache %s is unreadable (%s); rebuilding", self.path, exc)
            return {}

    def get(self, name: str, beta: float | None, tolerance: float):
        entry = self._entries.get(cache_key(name, beta, tolerance))
        if entry is None:
            self.misses += 1
        else:
            self.hits += 1
        return entry

    def put(self, name: str, beta: float | None, tolerance: float, value: dict) -> None:
        with self._lock:
            self._entries[cache_key(name, beta, tolerance)] = value
            self._write()

    def _write(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        payload = json.dumps({"schema": CACHE_SCHEMA, "entries": self._entries},
                             indent=1, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".constants-", suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(payload + "\n")
        os.replace(tmp, self.path)

    def __len__(self) -> int:
        return len(self._entries)
