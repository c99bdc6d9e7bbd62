import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from talkqa.manifest import Stimulus, StimulusSet
from talkqa.subjective import N_DISTORTIONS, RatingRecord

T0 = datetime(2025, 3, 3, 10, 0, tzinfo=timezone.utc)


def make_stimulus(sid="ga-src0", source="src0", label="ga", **kwargs) -> Stimulus:
    defaults = dict(
        stimulus_id=sid,
        source_id=source,
        video_uri=f"videos/{sid}.mp4",
        audio_uri=f"audio/{source}.wav",
        source_image_uri=f"portraits/{source}.png",
        generator_label=label,
        difficulty="Easy",
        subject_count=1,
        duration_s=5.0,
    )
    defaults.update(kwargs)
    return Stimulus(**defaults)


def make_set(n_sources=6, labels=("ga", "gb"), **kwargs) -> StimulusSet:
    stimuli = []
    for si in range(n_sources):
        for label in labels:
            stimuli.append(
                make_stimulus(
                    sid=f"{label}-src{si}", source=f"src{si}", label=label, **kwargs
                )
            )
    return StimulusSet(stimuli=tuple(stimuli))


_counter = {"n": 0}


def rate(subject, stimulus, q, d=None, session="s001") -> RatingRecord:
    _counter["n"] += 1
    return RatingRecord(
        subject_id=subject,
        stimulus_id=stimulus,
        q=float(q),
        d=tuple(d) if d is not None else (0,) * N_DISTORTIONS,
        timestamp=T0 + timedelta(seconds=_counter["n"]),
        session_id=session,
    )


@pytest.fixture
def small_set():
    return make_set()
