"""Partition a stimulus set into rating sessions under the per-session cap."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from talkqa.errors import ServiceError
from talkqa.manifest import StimulusSet


@dataclass(frozen=True)
class SessionPlan:
    """Ordered sessions; every stimulus appears exactly once across them.

    Presentation order within a session is this planned order, identical for
    all raters, which keeps the rating log auditable.
    """

    sessions: tuple[tuple[str, ...], ...]
    max_per_session: int
    seed: int

    def __post_init__(self):
        seen: set[str] = set()
        for session in self.sessions:
            if len(session) > self.max_per_session:
                raise ServiceError(
                    f"session of {len(session)} stimuli exceeds cap {self.max_per_session}"
                )
            for sid in session:
                if sid in seen:
                    raise ServiceError(f"stimulus {sid!r} appears in more than one session")
                seen.add(sid)

    @property
    def session_ids(self) -> tuple[str, ...]:
        return tuple(f"s{i + 1:03d}" for i in range(len(self.sessions)))

    def session(self, session_id: str) -> tuple[str, ...]:
        ids = self.session_ids
        if session_id not in ids:
            raise ServiceError(f"unknown session {session_id!r}")
        return self.sessions[ids.index(session_id)]

    def to_dict(self) -> dict:
        return {
            "max_per_session": self.max_per_session,
            "seed": self.seed,
            "sessions": {sid: list(stims) for sid, stims in zip(self.session_ids, self.sessions)},
        }


def plan_sessions(sset: StimulusSet, max_per_session: int = 200, seed: int = 0) -> SessionPlan:
    """ceil(n / cap) sessions with sizes differing by at most one, seeded shuffle."""
    if max_per_session < 1:
        raise ServiceError(f"max_per_session must be >= 1, got {max_per_session}")
    if len(sset) == 0:
        raise ServiceError("cannot plan sessions over an empty stimulus set")
    ids = sorted(s.stimulus_id for s in sset)
    random.Random(seed).shuffle(ids)
    n = len(ids)
    n_sessions = math.ceil(n / max_per_session)
    base = n // n_sessions
    extra = n % n_sessions  # first `extra` sessions get one more stimulus
    sessions: list[tuple[str, ...]] = []
    cursor = 0
    for i in range(n_sessions):
        size = base + (1 if i < extra else 0)
        sessions.append(tuple(ids[cursor : cursor + size]))
        cursor += size
    return SessionPlan(sessions=tuple(sessions), max_per_session=max_per_session, seed=seed)


def save_plan(plan: SessionPlan, path) -> None:
    Path(path).write_text(json.dumps(plan.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_plan(path) -> SessionPlan:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    sessions = tuple(tuple(v) for _, v in sorted(obj["sessions"].items()))
    return SessionPlan(
        sessions=sessions, max_per_session=int(obj["max_per_session"]), seed=int(obj["seed"])
    )
