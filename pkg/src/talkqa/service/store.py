"""Append-only event log with periodic snapshots.

Ratings are irreplaceable human data: every state change is one JSON line,
flushed and fsynced, so a crash can lose at most the line being written.
Snapshots only accelerate recovery; the log remains the source of truth.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterator


class EventLog:
    def __init__(self, path, snapshot_every: int = 500):
        self.path = Path(path)
        self.snapshot_path = Path(str(path) + ".snapshot.json")
        self.snapshot_every = snapshot_every
        self._count = 0
        self._fh = None

    def replay(self, skip: int = 0) -> Iterator[dict]:
        """Yield events in append order; ``skip`` hops over a snapshot prefix."""
        if not self.path.exists():
            return
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._count += 1
                    if self._count > skip:
                        yield json.loads(line)

    def append(self, event: dict) -> None:
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("a", encoding="utf-8")
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._count += 1

    @property
    def event_count(self) -> int:
        return self._count

    def should_snapshot(self) -> bool:
        return self.snapshot_every > 0 and self._count % self.snapshot_every == 0

    def write_snapshot(self, state: dict) -> None:
        payload = {"event_count": self._count, "state": state}
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        tmp.replace(self.snapshot_path)

    def read_snapshot(self) -> tuple[dict | None, int]:
        if not self.snapshot_path.exists():
            return None, 0
        payload = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
        return payload["state"], int(payload["event_count"])

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
