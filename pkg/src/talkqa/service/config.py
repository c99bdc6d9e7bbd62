"""Study-service configuration (JSON or TOML file)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import tzinfo
from pathlib import Path
from zoneinfo import ZoneInfo

from talkqa.errors import ServiceError
from talkqa.subjective import DEFAULT_DISTORTION_LABELS, N_DISTORTIONS

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


@dataclass(frozen=True)
class StudyConfig:
    raw_scale: tuple[float, float] = (0.0, 5.0)
    break_minutes: int = 30
    daily_cap: int = 3
    timezone: str | None = None  # IANA name; None = server-local days
    distortion_labels: tuple[str, ...] = DEFAULT_DISTORTION_LABELS
    media_root: str | None = None
    log_path: str = "ratings.log"

    def __post_init__(self):
        lo, hi = self.raw_scale
        if not lo < hi:
            raise ServiceError(f"raw_scale must have lo < hi, got {self.raw_scale}")
        if len(self.distortion_labels) != N_DISTORTIONS:
            raise ServiceError(
                f"need exactly {N_DISTORTIONS} distortion labels, got {len(self.distortion_labels)}"
            )
        if self.break_minutes < 0 or self.daily_cap < 1:
            raise ServiceError("break_minutes must be >= 0 and daily_cap >= 1")

    def tz(self) -> tzinfo | None:
        return ZoneInfo(self.timezone) if self.timezone else None

    def to_dict(self) -> dict:
        return {
            "raw_scale": list(self.raw_scale),
            "break_minutes": self.break_minutes,
            "daily_cap": self.daily_cap,
            "timezone": self.timezone,
            "distortion_labels": list(self.distortion_labels),
            "media_root": self.media_root,
            "log_path": self.log_path,
        }


def load_config(path) -> StudyConfig:
    path = Path(path)
    if path.suffix == ".toml":
        obj = tomllib.loads(path.read_text(encoding="utf-8"))
    else:
        obj = json.loads(path.read_text(encoding="utf-8"))
    known = {}
    if "raw_scale" in obj:
        known["raw_scale"] = tuple(float(v) for v in obj["raw_scale"])
    for key in ("break_minutes", "daily_cap"):
        if key in obj:
            known[key] = int(obj[key])
    for key in ("timezone", "media_root", "log_path"):
        if key in obj:
            known[key] = obj[key]
    if "distortion_labels" in obj:
        known["distortion_labels"] = tuple(str(v) for v in obj["distortion_labels"])
    return StudyConfig(**known)
