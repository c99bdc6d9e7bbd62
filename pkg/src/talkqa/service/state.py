"""Rating-session state machine: break/daily-cap enforcement and rating intake.

All transitions run under one lock, so a rater can never hold two in-progress
sessions and concurrent submissions serialize. Every accepted transition is
appended to the event log before the in-memory state changes are visible.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, NamedTuple

from talkqa.errors import ServiceError
from talkqa.ratings_io import ratings_csv_text
from talkqa.service.config import StudyConfig
from talkqa.service.planning import SessionPlan
from talkqa.service.store import EventLog
from talkqa.subjective import N_DISTORTIONS, RatingRecord


@dataclass
class CurrentSession:
    session_id: str
    position: int  # index of the next unrated stimulus in session order
    started_at: datetime


@dataclass
class RaterState:
    subject_id: str
    completed: list[tuple[str, datetime]] = field(default_factory=list)
    current: CurrentSession | None = None

    def last_finished_at(self) -> datetime | None:
        return max((ts for _, ts in self.completed), default=None)


@dataclass(frozen=True)
class StoredRating:
    subject_id: str
    session_id: str
    stimulus_id: str
    q: float
    d: tuple[int, ...]
    position: int
    timestamp: datetime


class Decision(NamedTuple):
    allow: bool
    reason: str | None = None
    retry_after_s: int | None = None


class UnknownRaterError(ServiceError):
    pass


class UnknownSessionError(ServiceError):
    pass


class StudyService:
    def __init__(
        self,
        plan: SessionPlan,
        config: StudyConfig = StudyConfig(),
        log: EventLog | None = None,
        clock: Callable[[], datetime] | None = None,
        media: dict[str, dict[str, str]] | None = None,
    ):
        self.plan = plan
        self.config = config
        self.log = log
        self._clock = clock
        self._media = media or {}
        self._lock = threading.RLock()
        self.raters: dict[str, RaterState] = {}
        self.ratings: dict[tuple[str, str], StoredRating] = {}
        self.supersessions: int = 0
        if log is not None:
            snapshot, skip = log.read_snapshot()
            if snapshot is not None:
                self._restore_state(snapshot)
            for event in log.replay(skip=skip):
                self._apply(event)

    @classmethod
    def from_manifest(cls, sset, plan: SessionPlan, **kwargs) -> "StudyService":
        media = {
            s.stimulus_id: {"video_uri": s.video_uri, "audio_uri": s.audio_uri}
            for s in sset
        }
        return cls(plan=plan, media=media, **kwargs)

    def stimulus_media(self, stimulus_id: str) -> dict[str, str]:
        return self._media.get(
            stimulus_id,
            {"video_uri": f"{stimulus_id}.mp4", "audio_uri": f"{stimulus_id}.wav"},
        )

    # -- time ---------------------------------------------------------------

    def now(self) -> datetime:
        if self._clock is not None:
            return self._clock()
        return datetime.now(self.config.tz()).astimezone()

    def _local_date(self, ts: datetime):
        tz = self.config.tz()
        return (ts.astimezone(tz) if tz else ts.astimezone()).date()

    # -- event replay ---------------------------------------------------------

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "rater":
            self.raters.setdefault(event["subject_id"], RaterState(subject_id=event["subject_id"]))
        elif kind == "start":
            rater = self.raters[event["subject_id"]]
            rater.current = CurrentSession(
                session_id=event["session_id"],
                position=0,
                started_at=datetime.fromisoformat(event["ts"]),
            )
        elif kind == "rating":
            rater = self.raters[event["subject_id"]]
            key = (event["subject_id"], event["stimulus_id"])
            if key in self.ratings:
                self.supersessions += 1
            self.ratings[key] = StoredRating(
                subject_id=event["subject_id"],
                session_id=event["session_id"],
                stimulus_id=event["stimulus_id"],
                q=float(event["q"]),
                d=tuple(int(b) for b in event["d"]),
                position=int(event["position"]),
                timestamp=datetime.fromisoformat(event["ts"]),
            )
            if rater.current is not None and event["position"] == rater.current.position:
                rater.current.position += 1
        elif kind == "finish":
            rater = self.raters[event["subject_id"]]
            rater.completed.append((event["session_id"], datetime.fromisoformat(event["ts"])))
            rater.current = None
        else:
            raise ServiceError(f"unknown event type {kind!r} in log")

    def _record(self, event: dict) -> None:
        if self.log is not None:
            self.log.append(event)
        self._apply(event)
        if self.log is not None and self.log.should_snapshot():
            self.log.write_snapshot(self._snapshot_state())

    # -- snapshot serialization ------------------------------------------------

    def _snapshot_state(self) -> dict:
        return {
            "supersessions": self.supersessions,
            "raters": {
                sid: {
                    "completed": [[s, ts.isoformat()] for s, ts in r.completed],
                    "current": (
                        {
                            "session_id": r.current.session_id,
                            "position": r.current.position,
                            "started_at": r.current.started_at.isoformat(),
                        }
                        if r.current
                        else None
                    ),
                }
                for sid, r in self.raters.items()
            },
            "ratings": [
                {
                    "subject_id": r.subject_id,
                    "session_id": r.session_id,
                    "stimulus_id": r.stimulus_id,
                    "q": r.q,
                    "d": list(r.d),
                    "position": r.position,
                    "ts": r.timestamp.isoformat(),
                }
                for r in self.ratings.values()
            ],
        }

    def _restore_state(self, payload: dict) -> None:
        self.supersessions = int(payload.get("supersessions", 0))
        for sid, obj in payload["raters"].items():
            current = None
            if obj["current"]:
                current = CurrentSession(
                    session_id=obj["current"]["session_id"],
                    position=int(obj["current"]["position"]),
                    started_at=datetime.fromisoformat(obj["current"]["started_at"]),
                )
            self.raters[sid] = RaterState(
                subject_id=sid,
                completed=[(s, datetime.fromisoformat(ts)) for s, ts in obj["completed"]],
                current=current,
            )
        for obj in payload["ratings"]:
            self.ratings[(obj["subject_id"], obj["stimulus_id"])] = StoredRating(
                subject_id=obj["subject_id"],
                session_id=obj["session_id"],
                stimulus_id=obj["stimulus_id"],
                q=float(obj["q"]),
                d=tuple(int(b) for b in obj["d"]),
                position=int(obj["position"]),
                timestamp=datetime.fromisoformat(obj["ts"]),
            )

    # -- operations -----------------------------------------------------------

    def register_rater(self, subject_id: str) -> bool:
        if not subject_id:
            raise ServiceError("subject_id must be non-empty")
        with self._lock:
            if subject_id in self.raters:
                return False
            self._record({"event": "rater", "subject_id": subject_id, "ts": self.now().isoformat()})
            return True

    def _require_rater(self, subject_id: str) -> RaterState:
        rater = self.raters.get(subject_id)
        if rater is None:
            raise UnknownRaterError(f"unknown rater {subject_id!r}")
        return rater

    def _require_session(self, session_id: str) -> tuple[str, ...]:
        if session_id not in self.plan.session_ids:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return self.plan.session(session_id)

    def authorize_session_start(self, subject_id: str, session_id: str) -> Decision:
        """Apply the protocol gates in order: break, daily cap, other session open."""
        with self._lock:
            self._require_session(session_id)
            rater = self._require_rater(subject_id)
            now = self.now()
            if rater.current is not None and rater.current.session_id == session_id:
                return Decision(allow=True)  # resume after refresh, not a new start
            last = rater.last_finished_at()
            if last is not None:
                elapsed = now - last
                required = timedelta(minutes=self.config.break_minutes)
                if elapsed < required:
                    remaining = (required - elapsed).total_seconds()
                    return Decision(allow=False, reason="break", retry_after_s=math.ceil(remaining))
            today = self._local_date(now)
            finished_today = sum(1 for _, ts in rater.completed if self._local_date(ts) == today)
            if finished_today >= self.config.daily_cap:
                return Decision(allow=False, reason="daily-cap")
            if rater.current is not None:
                return Decision(allow=False, reason="in-progress")
            if any(sid == session_id for sid, _ in rater.completed):
                return Decision(allow=False, reason="completed")
            self._record(
                {
                    "event": "start",
                    "subject_id": subject_id,
                    "session_id": session_id,
                    "ts": now.isoformat(),
                }
            )
            return Decision(allow=True)

    def next_stimulus(self, subject_id: str) -> dict:
        with self._lock:
            rater = self._require_rater(subject_id)
            if rater.current is None:
                raise ServiceError(f"rater {subject_id!r} has no active session")
            session = self.plan.session(rater.current.session_id)
            position = rater.current.position
            if position >= len(session):
                return {"done": True, "position": position, "total": len(session)}
            return {
                "done": False,
                "stimulus_id": session[position],
                "position": position,
                "total": len(session),
            }

    def record_rating(self, subject_id: str, stimulus_id: str, q: float, d) -> dict:
        with self._lock:
            rater = self._require_rater(subject_id)
            if rater.current is None:
                raise ServiceError(f"rater {subject_id!r} has no active session")
            d = tuple(int(b) for b in d)
            if len(d) != N_DISTORTIONS or any(b not in (0, 1) for b in d):
                raise ServiceError(
                    f"distortion vector must be {N_DISTORTIONS} binary entries, got {d!r}"
                )
            lo, hi = self.config.raw_scale
            if not lo <= q <= hi:
                raise ServiceError(f"score {q} outside raw scale [{lo}, {hi}]")
            session = self.plan.session(rater.current.session_id)
            if stimulus_id not in session:
                raise ServiceError(
                    f"stimulus {stimulus_id!r} is not part of session {rater.current.session_id!r}"
                )
            index = session.index(stimulus_id)
            if index > rater.current.position:
                raise ServiceError(
                    f"stimulus {stimulus_id!r} is ahead of the current position "
                    f"({index} > {rater.current.position}); rate items in order"
                )
            now = self.now()
            superseded = (subject_id, stimulus_id) in self.ratings
            self._record(
                {
                    "event": "rating",
                    "subject_id": subject_id,
                    "session_id": rater.current.session_id,
                    "stimulus_id": stimulus_id,
                    "q": float(q),
                    "d": list(d),
                    "position": index,
                    "ts": now.isoformat(),
                }
            )
            finished = False
            if rater.current is not None and rater.current.position >= len(session):
                self._record(
                    {
                        "event": "finish",
                        "subject_id": subject_id,
                        "session_id": rater.current.session_id,
                        "ts": now.isoformat(),
                    }
                )
                finished = True
            return {"stored": True, "superseded": superseded, "session_finished": finished}

    # -- export -----------------------------------------------------------------

    def export_records(self) -> list[RatingRecord]:
        """Latest rating per (subject, stimulus), ordered by subject, session, position."""
        with self._lock:
            rows = sorted(
                self.ratings.values(),
                key=lambda r: (r.subject_id, r.session_id, r.position),
            )
            return [
                RatingRecord(
                    subject_id=r.subject_id,
                    stimulus_id=r.stimulus_id,
                    q=r.q,
                    d=r.d,
                    timestamp=r.timestamp,
                    session_id=r.session_id,
                )
                for r in rows
            ]

    def export_csv(self) -> str:
        return ratings_csv_text(self.export_records())


def export_records_from_log(log_path) -> list[RatingRecord]:
    """Offline export: replay a rating log without a session plan (latest wins)."""
    log = EventLog(log_path)
    latest: dict[tuple[str, str], RatingRecord] = {}
    order: dict[tuple[str, str], tuple] = {}
    for event in log.replay():
        if event.get("event") != "rating":
            continue
        key = (event["subject_id"], event["stimulus_id"])
        latest[key] = RatingRecord(
            subject_id=event["subject_id"],
            stimulus_id=event["stimulus_id"],
            q=float(event["q"]),
            d=tuple(int(b) for b in event["d"]),
            timestamp=datetime.fromisoformat(event["ts"]),
            session_id=event["session_id"],
        )
        order[key] = (event["subject_id"], event["session_id"], int(event["position"]))
    return [latest[key] for key in sorted(latest, key=lambda k: order[k])]
