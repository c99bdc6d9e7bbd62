"""Stimulus data model and JSONL manifest ingestion/validation.

Manifest format: UTF-8 JSONL, one stimulus object per line. An optional first
line ``{"_header": {"declared_counts": {label: [generated, attempted]}}}``
carries the per-generator success counts used for reconciliation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from talkqa.errors import ManifestError

logger = logging.getLogger(__name__)

DIFFICULTIES = ("Easy", "Medium", "Hard")

_FIELDS = (
    "stimulus_id",
    "source_id",
    "video_uri",
    "audio_uri",
    "source_image_uri",
    "generator_label",
    "difficulty",
    "subject_count",
    "duration_s",
)


@dataclass(frozen=True)
class Stimulus:
    """One generated talking-human video plus its provenance metadata."""

    stimulus_id: str
    source_id: str
    video_uri: str
    audio_uri: str
    source_image_uri: str
    generator_label: str
    difficulty: str
    subject_count: int
    duration_s: float

    def __post_init__(self):
        if not self.stimulus_id:
            raise ManifestError("stimulus_id must be non-empty")
        if self.difficulty not in DIFFICULTIES:
            raise ManifestError(
                f"unknown difficulty {self.difficulty!r} for {self.stimulus_id!r}"
                f" (expected one of {DIFFICULTIES})"
            )
        if self.subject_count < 1:
            raise ManifestError(f"subject_count must be >= 1 for {self.stimulus_id!r}")
        if not self.duration_s > 0:
            raise ManifestError(f"duration_s must be > 0 for {self.stimulus_id!r}")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _FIELDS}

    @classmethod
    def from_dict(cls, obj: dict) -> "Stimulus":
        missing = [name for name in _FIELDS if name not in obj]
        if missing:
            raise ManifestError(f"missing fields: {', '.join(missing)}")
        return cls(
            stimulus_id=str(obj["stimulus_id"]),
            source_id=str(obj["source_id"]),
            video_uri=str(obj["video_uri"]),
            audio_uri=str(obj["audio_uri"]),
            source_image_uri=str(obj["source_image_uri"]),
            generator_label=str(obj["generator_label"]),
            difficulty=str(obj["difficulty"]),
            subject_count=int(obj["subject_count"]),
            duration_s=float(obj["duration_s"]),
        )


@dataclass(frozen=True)
class StimulusSet:
    """Immutable collection of stimuli; ids are unique by construction."""

    stimuli: tuple[Stimulus, ...]
    declared_counts: dict[str, tuple[int, int]] | None = None

    def __post_init__(self):
        seen = set()
        for s in self.stimuli:
            if s.stimulus_id in seen:
                raise ManifestError(f"duplicate stimulus_id {s.stimulus_id!r}")
            seen.add(s.stimulus_id)

    def __len__(self) -> int:
        return len(self.stimuli)

    def __iter__(self):
        return iter(self.stimuli)

    def by_id(self) -> dict[str, Stimulus]:
        return {s.stimulus_id: s for s in self.stimuli}

    def source_ids(self) -> list[str]:
        return sorted({s.source_id for s in self.stimuli})

    def source_of(self) -> dict[str, str]:
        return {s.stimulus_id: s.source_id for s in self.stimuli}

    def label_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for s in self.stimuli:
            counts[s.generator_label] = counts.get(s.generator_label, 0) + 1
        return counts


def load_manifest(path) -> StimulusSet:
    """Parse a JSONL manifest; raises ManifestError with the offending line number."""
    path = Path(path)
    stimuli: list[Stimulus] = []
    declared: dict[str, tuple[int, int]] | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if "_header" in obj:
                if lineno != 1:
                    raise ManifestError(f"{path}:{lineno}: header object only allowed on line 1")
                raw = obj["_header"].get("declared_counts", {})
                declared = {
                    str(label): (int(pair[0]), int(pair[1])) for label, pair in raw.items()
                }
                continue
            try:
                stimuli.append(Stimulus.from_dict(obj))
            except (ManifestError, ValueError, TypeError) as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    if not stimuli:
        logger.warning("manifest %s contains no stimuli", path)
    return StimulusSet(stimuli=tuple(stimuli), declared_counts=declared)


def dump_manifest(sset: StimulusSet, path) -> None:
    """Write back the JSONL form; load -> dump -> load round-trips."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if sset.declared_counts is not None:
            header = {"_header": {"declared_counts": {k: list(v) for k, v in sorted(sset.declared_counts.items())}}}
            fh.write(json.dumps(header, sort_keys=True) + "\n")
        for s in sset.stimuli:
            fh.write(json.dumps(s.to_dict(), sort_keys=True) + "\n")


@dataclass
class ValidationReport:
    """Findings from manifest validation; empty report means valid."""

    count_mismatches: list[dict] = field(default_factory=list)
    missing_media: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    total_stimuli: int = 0
    label_counts: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not (self.count_mismatches or self.missing_media or self.violations)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "total_stimuli": self.total_stimuli,
            "label_counts": self.label_counts,
            "count_mismatches": self.count_mismatches,
            "missing_media": self.missing_media,
            "violations": self.violations,
        }


def validate_manifest(sset: StimulusSet, media_root=None, check_media: bool = True) -> ValidationReport:
    """Reconcile declared per-generator counts and probe media URIs.

    Missing media files are report findings, not errors, so score processing
    can run on metadata alone.
    """
    report = ValidationReport(total_stimuli=len(sset), label_counts=sset.label_counts())
    if sset.declared_counts is not None:
        for label, (generated, attempted) in sorted(sset.declared_counts.items()):
            found = report.label_counts.get(label, 0)
            if found != generated:
                report.count_mismatches.append(
                    {"label": label, "declared": generated, "attempted": attempted, "found": found}
                )
        for label in sorted(set(report.label_counts) - set(sset.declared_counts)):
            report.violations.append(f"label {label!r} present but not declared in header")
    if check_media:
        root = Path(media_root) if media_root is not None else None
        for s in sset.stimuli:
            for field_name in ("video_uri", "audio_uri", "source_image_uri"):
                uri = getattr(s, field_name)
                if "://" in uri:
                    continue  # remote URIs are not probed
                p = Path(uri) if root is None else root / uri
                if not p.exists():
                    report.missing_media.append(
                        {"stimulus_id": s.stimulus_id, "field": field_name, "uri": uri}
                    )
    return report
