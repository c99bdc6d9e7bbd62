"""HTTP/JSON surface of the study service."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from talkqa.errors import ServiceError
from talkqa.service.state import StudyService, UnknownRaterError, UnknownSessionError


class RaterIn(BaseModel):
    subject_id: str


class StartIn(BaseModel):
    subject_id: str


class RatingIn(BaseModel):
    subject_id: str
    stimulus_id: str
    q: float
    d: list[int]


def create_app(service: StudyService) -> FastAPI:
    app = FastAPI(title="talkqa study service")
    app.state.service = service

    media_root = service.config.media_root
    if media_root and Path(media_root).is_dir():
        app.mount("/media", StaticFiles(directory=media_root), name="media")

    def media_url(uri: str) -> str:
        if "://" in uri or not media_root:
            return uri
        return f"/media/{uri}"

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/config")
    def config():
        cfg = service.config.to_dict()
        cfg.pop("log_path", None)
        cfg.pop("media_root", None)
        return cfg

    @app.post("/raters", status_code=201)
    def register(rater: RaterIn, response: Response):
        try:
            created = service.register_rater(rater.subject_id)
        except ServiceError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if not created:
            response.status_code = 200
        return {"subject_id": rater.subject_id, "created": created}

    @app.post("/sessions/{session_id}/start")
    def start(session_id: str, body: StartIn):
        try:
            decision = service.authorize_session_start(body.subject_id, session_id)
        except (UnknownRaterError, UnknownSessionError) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if not decision.allow:
            payload = {"reason": decision.reason}
            if decision.retry_after_s is not None:
                payload["retry_after_s"] = decision.retry_after_s
            raise HTTPException(status_code=403, detail=payload)
        progress = service.next_stimulus(body.subject_id)
        return {"allow": True, "position": progress["position"], "total": progress["total"]}

    @app.get("/sessions/{session_id}/next")
    def next_stimulus(session_id: str, subject_id: str):
        try:
            state = service.next_stimulus(subject_id)
        except UnknownRaterError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ServiceError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        if state["done"]:
            return state
        stimulus = service.stimulus_media(state["stimulus_id"])
        return {
            **state,
            "video_url": media_url(stimulus["video_uri"]),
            "audio_url": media_url(stimulus["audio_uri"]),
        }

    @app.post("/ratings", status_code=201)
    def rate(rating: RatingIn):
        try:
            return service.record_rating(rating.subject_id, rating.stimulus_id, rating.q, rating.d)
        except UnknownRaterError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ServiceError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/export/ratings.csv")
    def export():
        return Response(content=service.export_csv(), media_type="text/csv")

    return app
