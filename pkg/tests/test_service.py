import threading
from datetime import datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from talkqa.ratings_io import read_ratings_csv
from talkqa.service.app import create_app
from talkqa.service.config import StudyConfig
from talkqa.service.planning import plan_sessions
from talkqa.service.state import StudyService, export_records_from_log
from talkqa.service.store import EventLog
from talkqa.subjective import process_ratings
from talkqa.synth import synth_manifest


class FakeClock:
    def __init__(self, start=datetime(2025, 6, 2, 9, 0, tzinfo=timezone.utc)):
        self.now = start

    def advance(self, minutes=0, seconds=0):
        self.now += timedelta(minutes=minutes, seconds=seconds)

    def __call__(self):
        return self.now


def build_service(tmp_path=None, n_sources=4, cap=3, clock=None):
    sset = synth_manifest(n_sources=n_sources, generators=("ga", "gb", "gc"), seed=0)
    plan = plan_sessions(sset, max_per_session=cap, seed=0)
    log = EventLog(tmp_path / "ratings.log") if tmp_path else None
    config = StudyConfig(timezone="UTC")
    service = StudyService.from_manifest(sset, plan, config=config, log=log, clock=clock)
    return service, plan


def rate_whole_session(client, subject, session_id, q=3.0, vary=0.0):
    started = client.post(f"/sessions/{session_id}/start", json={"subject_id": subject})
    assert started.status_code == 200, started.text
    while True:
        nxt = client.get(f"/sessions/{session_id}/next", params={"subject_id": subject}).json()
        if nxt["done"]:
            return
        score = min(q + vary * nxt["position"], 5.0)
        resp = client.post(
            "/ratings",
            json={"subject_id": subject, "stimulus_id": nxt["stimulus_id"], "q": score, "d": [0] * 12},
        )
        assert resp.status_code == 201, resp.text
        if resp.json()["session_finished"]:
            return


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def client(clock, tmp_path):
    service, _ = build_service(tmp_path, clock=clock)
    return TestClient(create_app(service))


class TestBasicFlow:
    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_config_exposes_labels_and_scale(self, client):
        cfg = client.get("/config").json()
        assert cfg["raw_scale"] == [0.0, 5.0]
        assert len(cfg["distortion_labels"]) == 12
        assert cfg["break_minutes"] == 30
        assert cfg["daily_cap"] == 3

    def test_register_twice(self, client):
        first = client.post("/raters", json={"subject_id": "r1"})
        second = client.post("/raters", json={"subject_id": "r1"})
        assert first.status_code == 201
        assert second.status_code == 200

    def test_fresh_rater_allowed(self, client):
        client.post("/raters", json={"subject_id": "r1"})
        resp = client.post("/sessions/s001/start", json={"subject_id": "r1"})
        assert resp.status_code == 200
        assert resp.json() == {"allow": True, "position": 0, "total": 3}

    def test_next_serves_media_urls(self, client):
        client.post("/raters", json={"subject_id": "r1"})
        client.post("/sessions/s001/start", json={"subject_id": "r1"})
        nxt = client.get("/sessions/s001/next", params={"subject_id": "r1"}).json()
        assert nxt["position"] == 0 and nxt["total"] == 3
        assert nxt["video_url"].endswith(".mp4")
        assert nxt["audio_url"].endswith(".wav")

    def test_complete_session_autofinishes(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001")
        nxt = client.get("/sessions/s001/next", params={"subject_id": "r1"})
        assert nxt.status_code == 409  # no active session once finished

    def test_unknown_rater_404(self, client):
        resp = client.post("/sessions/s001/start", json={"subject_id": "ghost"})
        assert resp.status_code == 404

    def test_unknown_session_404(self, client):
        client.post("/raters", json={"subject_id": "r1"})
        resp = client.post("/sessions/s999/start", json={"subject_id": "r1"})
        assert resp.status_code == 404


class TestProtocolRules:
    def test_break_denied_at_29_allowed_at_30(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001")
        clock.advance(minutes=29)
        denied = client.post("/sessions/s002/start", json={"subject_id": "r1"})
        assert denied.status_code == 403
        detail = denied.json()["detail"]
        assert detail["reason"] == "break"
        assert detail["retry_after_s"] == 60
        clock.advance(minutes=1)
        allowed = client.post("/sessions/s002/start", json={"subject_id": "r1"})
        assert allowed.status_code == 200

    def test_fourth_session_same_day_denied(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        for session_id in ("s001", "s002", "s003"):
            rate_whole_session(client, "r1", session_id)
            clock.advance(minutes=31)
        denied = client.post("/sessions/s004/start", json={"subject_id": "r1"})
        assert denied.status_code == 403
        assert denied.json()["detail"]["reason"] == "daily-cap"

    def test_cap_resets_next_day(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        for session_id in ("s001", "s002", "s003"):
            rate_whole_session(client, "r1", session_id)
            clock.advance(minutes=31)
        clock.advance(minutes=60 * 20)  # past midnight UTC
        allowed = client.post("/sessions/s004/start", json={"subject_id": "r1"})
        assert allowed.status_code == 200

    def test_other_session_in_progress_denied(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        client.post("/sessions/s001/start", json={"subject_id": "r1"})
        denied = client.post("/sessions/s002/start", json={"subject_id": "r1"})
        assert denied.status_code == 403
        assert denied.json()["detail"]["reason"] == "in-progress"

    def test_resume_same_session_allowed(self, client):
        client.post("/raters", json={"subject_id": "r1"})
        client.post("/sessions/s001/start", json={"subject_id": "r1"})
        nxt = client.get("/sessions/s001/next", params={"subject_id": "r1"}).json()
        client.post(
            "/ratings",
            json={"subject_id": "r1", "stimulus_id": nxt["stimulus_id"], "q": 2.0, "d": [0] * 12},
        )
        resumed = client.post("/sessions/s001/start", json={"subject_id": "r1"})
        assert resumed.status_code == 200
        assert resumed.json()["position"] == 1

    def test_finished_session_cannot_restart(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001")
        clock.advance(minutes=31)
        resp = client.post("/sessions/s001/start", json={"subject_id": "r1"})
        assert resp.status_code == 403
        assert resp.json()["detail"]["reason"] == "completed"


class TestRatingIntake:
    def _start(self, client):
        client.post("/raters", json={"subject_id": "r1"})
        client.post("/sessions/s001/start", json={"subject_id": "r1"})
        return client.get("/sessions/s001/next", params={"subject_id": "r1"}).json()

    def test_malformed_d_rejected(self, client):
        nxt = self._start(client)
        resp = client.post(
            "/ratings",
            json={"subject_id": "r1", "stimulus_id": nxt["stimulus_id"], "q": 2.0, "d": [0] * 11},
        )
        assert resp.status_code == 400

    def test_out_of_scale_rejected(self, client):
        nxt = self._start(client)
        resp = client.post(
            "/ratings",
            json={"subject_id": "r1", "stimulus_id": nxt["stimulus_id"], "q": 9.0, "d": [0] * 12},
        )
        assert resp.status_code == 400

    def test_out_of_session_stimulus_rejected(self, client):
        self._start(client)
        resp = client.post(
            "/ratings", json={"subject_id": "r1", "stimulus_id": "nope", "q": 2.0, "d": [0] * 12}
        )
        assert resp.status_code == 400

    def test_skipping_ahead_rejected(self, client):
        self._start(client)
        service: StudyService = client.app.state.service
        ahead = service.plan.session("s001")[2]
        resp = client.post(
            "/ratings", json={"subject_id": "r1", "stimulus_id": ahead, "q": 2.0, "d": [0] * 12}
        )
        assert resp.status_code == 400
        assert "order" in resp.json()["detail"]

    def test_revisit_overwrites_latest_wins(self, client):
        nxt = self._start(client)
        sid = nxt["stimulus_id"]
        client.post("/ratings", json={"subject_id": "r1", "stimulus_id": sid, "q": 1.0, "d": [0] * 12})
        redo = client.post(
            "/ratings", json={"subject_id": "r1", "stimulus_id": sid, "q": 4.5, "d": [1] + [0] * 11}
        )
        assert redo.status_code == 201
        assert redo.json()["superseded"] is True
        csv_text = client.get("/export/ratings.csv").text
        rows = [line for line in csv_text.splitlines() if line.startswith("r1")]
        assert len(rows) == 1
        assert rows[0].split(",")[2] == "4.5"


class TestExport:
    def test_empty_store_header_only(self, client):
        text = client.get("/export/ratings.csv").text
        assert text.splitlines() == [
            "subject_id,stimulus_id,q," + ",".join(f"d{i + 1:02d}" for i in range(12)) + ",timestamp,session_id"
        ]

    def test_two_raters_three_stimuli(self, client, clock):
        for subject in ("r1", "r2"):
            client.post("/raters", json={"subject_id": subject})
            rate_whole_session(client, subject, "s001", q=2.5)
        lines = client.get("/export/ratings.csv").text.splitlines()
        assert len(lines) == 1 + 6

    def test_export_byte_identical_without_new_data(self, client, clock):
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001")
        first = client.get("/export/ratings.csv").content
        clock.advance(minutes=5)
        second = client.get("/export/ratings.csv").content
        assert first == second

    def test_export_then_process_conserves_counts(self, tmp_path, clock):
        service, plan = build_service(tmp_path, clock=clock)
        client = TestClient(create_app(service))
        for subject in ("r1", "r2", "r3"):
            client.post("/raters", json={"subject_id": subject})
            q_profile = {"r1": 1.0, "r2": 2.0, "r3": 3.0}[subject]
            started = client.post(f"/sessions/s001/start", json={"subject_id": subject})
            assert started.status_code == 200
            for bump in range(3):
                nxt = client.get("/sessions/s001/next", params={"subject_id": subject}).json()
                client.post(
                    "/ratings",
                    json={
                        "subject_id": subject,
                        "stimulus_id": nxt["stimulus_id"],
                        "q": q_profile + bump * 0.5,
                        "d": [0] * 12,
                    },
                )
        csv_path = tmp_path / "export.csv"
        csv_path.write_text(client.get("/export/ratings.csv").text)
        records = read_ratings_csv(csv_path)
        result = process_ratings(records, screening=False)
        assert len(result.table.rows) == 3
        for row in result.table.rows:
            assert row.n_ratings == 3


class TestDurability:
    def test_replay_reproduces_export(self, tmp_path, clock):
        service, _ = build_service(tmp_path, clock=clock)
        client = TestClient(create_app(service))
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001")
        before = service.export_csv()
        service.log.close()

        recovered, _ = build_service(tmp_path, clock=clock)
        assert recovered.export_csv() == before
        assert recovered.raters["r1"].completed[0][0] == "s001"

    def test_offline_export_matches_service_export(self, tmp_path, clock):
        service, _ = build_service(tmp_path, clock=clock)
        client = TestClient(create_app(service))
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001")
        offline = export_records_from_log(tmp_path / "ratings.log")
        assert offline == service.export_records()

    def test_snapshot_plus_tail_equals_full_replay(self, tmp_path, clock):
        sset = synth_manifest(n_sources=4, generators=("ga", "gb", "gc"), seed=0)
        plan = plan_sessions(sset, max_per_session=3, seed=0)
        log = EventLog(tmp_path / "ratings.log", snapshot_every=4)
        config = StudyConfig(timezone="UTC")
        service = StudyService.from_manifest(sset, plan, config=config, log=log, clock=clock)
        client = TestClient(create_app(service))
        client.post("/raters", json={"subject_id": "r1"})
        rate_whole_session(client, "r1", "s001", q=1.0, vary=0.5)  # > 4 events
        assert (tmp_path / "ratings.log.snapshot.json").exists()
        before = service.export_csv()
        completed_before = list(service.raters["r1"].completed)
        log.close()

        recovered = StudyService.from_manifest(
            sset, plan, config=config,
            log=EventLog(tmp_path / "ratings.log", snapshot_every=4), clock=clock,
        )
        assert recovered.export_csv() == before
        assert recovered.raters["r1"].completed == completed_before

        # snapshot-accelerated recovery must match a cold full replay
        import shutil

        shutil.copy(tmp_path / "ratings.log", tmp_path / "cold.log")
        cold = StudyService.from_manifest(
            sset, plan, config=config, log=EventLog(tmp_path / "cold.log"), clock=clock
        )
        assert cold.export_csv() == before


class TestConcurrency:
    def test_single_in_progress_session_under_racing_starts(self, clock):
        service, plan = build_service(None, n_sources=10, cap=3, clock=clock)
        service.register_rater("r1")
        results = []

        def try_start(session_id):
            results.append(service.authorize_session_start("r1", session_id))

        threads = [
            threading.Thread(target=try_start, args=(sid,))
            for sid in plan.session_ids[:6]
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sum(1 for d in results if d.allow) == 1
        assert sum(1 for d in results if d.reason == "in-progress") == len(results) - 1
