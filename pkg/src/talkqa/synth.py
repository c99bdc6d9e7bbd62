"""Deterministic synthetic data for the end-to-end harness and tests."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from talkqa.manifest import DIFFICULTIES, Stimulus, StimulusSet
from talkqa.subjective import N_DISTORTIONS, RatingRecord, SubjectiveTable, TableRow

DEFAULT_GENERATORS = ("ga", "gb", "gc", "gd", "ge")


def synth_manifest(
    n_sources: int = 100,
    generators: tuple[str, ...] = DEFAULT_GENERATORS,
    seed: int = 0,
    declare_counts: bool = False,
) -> StimulusSet:
    """One stimulus per (source, generator) pair with varied metadata."""
    rng = np.random.default_rng(seed)
    stimuli = []
    for si in range(n_sources):
        source_id = f"src{si:04d}"
        subject_count = int(rng.integers(1, 4))
        for gen in generators:
            stimuli.append(
                Stimulus(
                    stimulus_id=f"{gen}-{source_id}",
                    source_id=source_id,
                    video_uri=f"videos/{gen}-{source_id}.mp4",
                    audio_uri=f"audio/{source_id}.wav",
                    source_image_uri=f"portraits/{source_id}.png",
                    generator_label=gen,
                    difficulty=DIFFICULTIES[si % 3],
                    subject_count=subject_count,
                    duration_s=float(4 + si % 7),
                )
            )
    declared = {gen: (n_sources, n_sources) for gen in generators} if declare_counts else None
    return StimulusSet(stimuli=tuple(stimuli), declared_counts=declared)


def synth_manifest_with_counts(label_counts: dict[str, int], seed: int = 0) -> StimulusSet:
    """Manifest with an exact per-generator stimulus count (sources shared across labels)."""
    n_sources = max(label_counts.values())
    stimuli = []
    for label, count in sorted(label_counts.items()):
        for si in range(count):
            source_id = f"src{si:04d}"
            stimuli.append(
                Stimulus(
                    stimulus_id=f"{label}-{source_id}",
                    source_id=source_id,
                    video_uri=f"videos/{label}-{source_id}.mp4",
                    audio_uri=f"audio/{source_id}.wav",
                    source_image_uri=f"portraits/{source_id}.png",
                    generator_label=label,
                    difficulty=DIFFICULTIES[si % 3],
                    subject_count=1 + si % 3,
                    duration_s=float(4 + si % 7),
                )
            )
    declared = {label: (count, n_sources) for label, count in label_counts.items()}
    return StimulusSet(stimuli=tuple(stimuli), declared_counts=declared)


def synth_mos(sset: StimulusSet, seed: int = 0) -> dict[str, float]:
    """Scores in [0, 5] with source- and generator-level structure plus noise."""
    rng = np.random.default_rng(seed)
    sources = sset.source_ids()
    labels = sorted({s.generator_label for s in sset})
    source_base = {src: rng.uniform(1.0, 4.0) for src in sources}
    label_shift = {lab: rng.normal(0.0, 0.6) for lab in labels}
    return {
        s.stimulus_id: float(
            np.clip(source_base[s.source_id] + label_shift[s.generator_label] + rng.normal(0.0, 0.3), 0.0, 5.0)
        )
        for s in sset
    }


def synth_table(mos_map: dict[str, float], n_ratings: int = 40) -> SubjectiveTable:
    """Wrap a synthetic score map in the subjective-table shape (no distortions)."""
    rows = tuple(
        TableRow(
            stimulus_id=sid,
            mos=mos_map[sid],
            n_ratings=n_ratings,
            distortions=(0,) * N_DISTORTIONS,
        )
        for sid in sorted(mos_map)
    )
    return SubjectiveTable(rows=rows, retained_subjects=frozenset(), rejected_subjects=frozenset())


def synth_ratings(
    sset: StimulusSet,
    mos_map: dict[str, float] | None = None,
    n_subjects: int = 40,
    seed: int = 0,
    noise: float = 0.25,
    raw_scale: tuple[float, float] = (0.0, 5.0),
) -> list[RatingRecord]:
    """Per-subject biased, noisy ratings of every stimulus by every subject."""
    rng = np.random.default_rng(seed)
    if mos_map is None:
        mos_map = synth_mos(sset, seed=seed)
    lo, hi = raw_scale
    t0 = datetime(2025, 1, 6, 9, 0, tzinfo=timezone.utc)
    records: list[RatingRecord] = []
    sids = sorted(mos_map)
    gains = rng.uniform(0.8, 1.2, size=n_subjects)
    shifts = rng.normal(0.0, 0.3, size=n_subjects)
    for ui in range(n_subjects):
        subject_id = f"subj{ui:03d}"
        qs = np.clip(gains[ui] * np.array([mos_map[s] for s in sids]) + shifts[ui] + rng.normal(0.0, noise, size=len(sids)), lo, hi)
        flag_p = np.clip((hi - qs) / (hi - lo) * 0.5, 0.0, 0.45)
        for k, sid in enumerate(sids):
            bits = tuple(int(b) for b in rng.random(N_DISTORTIONS) < flag_p[k])
            records.append(
                RatingRecord(
                    subject_id=subject_id,
                    stimulus_id=sid,
                    q=float(qs[k]),
                    d=bits,
                    timestamp=t0 + timedelta(minutes=len(records)),
                    session_id=f"s{1 + k // 200:03d}",
                )
            )
    return records
