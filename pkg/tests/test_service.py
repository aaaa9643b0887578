"""HTTP contract: ingestion, projections, optimistic concurrency, exports."""

from __future__ import annotations

import threading
import time

import pytest
from fastapi.testclient import TestClient

from recap.config import AppConfig
from recap.service import create_app
from recap.store import FileStore

from conftest import SURVEY_LINES


@pytest.fixture
def client():
    return TestClient(create_app(AppConfig()))


def create_meeting(client, body: str = SURVEY_LINES, actor: str = "amy", fmt: str | None = None):
    url = "/v1/meetings" + (f"?format={fmt}" if fmt else "")
    return client.post(url, content=body.encode(), headers={"X-Actor": actor})


class TestIngestion:
    def test_plain_transcript_created_sync(self, client):
        response = create_meeting(client)
        assert response.status_code == 201
        meeting_id = response.json()["meeting_id"]
        recap = client.get(f"/v1/meetings/{meeting_id}/recap?view=both")
        assert recap.status_code == 200
        body = recap.json()
        assert body["version"] == 1
        assert body["highlights"]["action_items"]
        assert body["chapters"]

    def test_empty_body_422(self, client):
        assert create_meeting(client, body="").status_code == 422

    def test_malformed_body_400(self, client):
        assert create_meeting(client, body="@@@\n!!!\n").status_code == 400

    def test_oversized_body_413(self):
        app = create_app(AppConfig(max_body_bytes=64))
        response = TestClient(app).post("/v1/meetings", content=b"A: " + b"x" * 100)
        assert response.status_code == 413

    def test_unknown_format_400(self, client):
        assert create_meeting(client, fmt="pdf").status_code == 400

    def test_large_transcript_runs_async(self, client):
        lines = "\n".join(f"P{i % 3}: utterance number {i} with several words" for i in range(300))
        response = create_meeting(client, body=lines)
        assert response.status_code == 202
        meeting_id = response.json()["meeting_id"]
        observed = set()
        for _ in range(200):
            status = client.get(f"/v1/meetings/{meeting_id}/status").json()["status"]
            observed.add(status)
            if status == "ready":
                break
            time.sleep(0.05)
        assert "ready" in observed
        recap = client.get(f"/v1/meetings/{meeting_id}/recap")
        assert recap.status_code == 200
        assert recap.json()["utterance_count"] == 300

    def test_unknown_meeting_404(self, client):
        assert client.get("/v1/meetings/nope/recap").status_code == 404
        assert client.get("/v1/meetings/nope/status").status_code == 404


class TestRecapProjections:
    def test_view_filters(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        highlights = client.get(f"/v1/meetings/{meeting_id}/recap?view=highlights").json()
        assert "chapters" not in highlights and "highlights" in highlights
        hierarchical = client.get(f"/v1/meetings/{meeting_id}/recap?view=hierarchical").json()
        assert "highlights" not in hierarchical and "chapters" in hierarchical
        both = client.get(f"/v1/meetings/{meeting_id}/recap?view=both").json()
        assert "highlights" in both and "chapters" in both

    def test_etag_and_304(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        first = client.get(f"/v1/meetings/{meeting_id}/recap")
        etag = first.headers["ETag"]
        assert etag == '"1"'
        cached = client.get(f"/v1/meetings/{meeting_id}/recap", headers={"If-None-Match": etag})
        assert cached.status_code == 304

    def test_etag_tracks_version(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={"base_version": 1, "action": "share", "payload": {"node_id": "ai-4"}},
            headers={"X-Actor": "amy"},
        )
        assert client.get(f"/v1/meetings/{meeting_id}/recap").headers["ETag"] == '"2"'


class TestEvents:
    def test_edit_bumps_version(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        response = client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={
                "base_version": 1,
                "action": "edit_note",
                "payload": {"note_id": "ai-4", "summary": "Bob ships results Friday."},
            },
            headers={"X-Actor": "amy"},
        )
        assert response.status_code == 200
        assert response.json()["new_version"] == 2

    def test_stale_base_version_409(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        ok = {
            "base_version": 1,
            "action": "edit_note",
            "payload": {"note_id": "ai-4", "summary": "First edit."},
        }
        assert client.post(f"/v1/meetings/{meeting_id}/events", json=ok).status_code == 200
        stale = dict(ok, payload={"note_id": "ai-4", "summary": "Second edit."})
        response = client.post(f"/v1/meetings/{meeting_id}/events", json=stale)
        assert response.status_code == 409
        assert response.json()["current_version"] == 2

    def test_concurrent_same_base_exactly_one_wins(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        results = []
        barrier = threading.Barrier(2)

        def attempt(summary: str):
            barrier.wait()
            response = client.post(
                f"/v1/meetings/{meeting_id}/events",
                json={
                    "base_version": 1,
                    "action": "edit_note",
                    "payload": {"note_id": "ai-4", "summary": summary},
                },
            )
            results.append(response.status_code)

        threads = [threading.Thread(target=attempt, args=(f"edit {i}",)) for i in range(2)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert sorted(results) == [200, 409]
        assert client.get(f"/v1/meetings/{meeting_id}/recap").json()["version"] == 2

    def test_validation_failure_400(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        response = client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={"base_version": 1, "action": "edit_note", "payload": {"note_id": "ai-404", "summary": "x"}},
        )
        assert response.status_code == 400

    def test_delete_rolling_note_400(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        recap = client.get(f"/v1/meetings/{meeting_id}/recap?view=hierarchical").json()
        rolling_id = recap["chapters"][0]["rolling_notes"][0]["rolling_id"]
        response = client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={"base_version": 1, "action": "delete_note", "payload": {"note_id": rolling_id}},
        )
        assert response.status_code == 400

    def test_actor_mismatch_403(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        response = client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={
                "actor": "mallory",
                "base_version": 1,
                "action": "share",
                "payload": {"node_id": "ai-4"},
            },
            headers={"X-Actor": "amy"},
        )
        assert response.status_code == 403

    def test_head_version_is_one_plus_event_count(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        accepted = 0
        for i in range(5):
            response = client.post(
                f"/v1/meetings/{meeting_id}/events",
                json={
                    "base_version": 1 + accepted,
                    "action": "share",
                    "payload": {"node_id": "ai-4"},
                },
            )
            assert response.status_code == 200
            accepted += 1
        assert client.get(f"/v1/meetings/{meeting_id}/recap").json()["version"] == 1 + accepted


class TestExports:
    def test_training_export_after_edit(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={
                "base_version": 1,
                "action": "edit_note",
                "payload": {"note_id": "ai-4", "summary": "Bob sends results Friday."},
            },
        )
        response = client.get(
            f"/v1/meetings/{meeting_id}/export/training", headers={"X-Actor": "amy"}
        )
        assert response.status_code == 200
        import json

        lines = [json.loads(line) for line in response.text.strip().splitlines()]
        assert len(lines) == 1
        assert lines[0]["signal"] == "quality_improvement"
        assert lines[0]["schema_version"] == 1

    def test_training_export_owner_only(self, client):
        meeting_id = create_meeting(client, actor="amy").json()["meeting_id"]
        denied = client.get(
            f"/v1/meetings/{meeting_id}/export/training", headers={"X-Actor": "eve"}
        )
        assert denied.status_code == 403

    def test_markdown_export_whole_document(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        response = client.get(f"/v1/meetings/{meeting_id}/export/markdown")
        assert response.status_code == 200
        assert response.text.startswith("# Meeting recap")

    def test_markdown_node_share(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        response = client.get(f"/v1/meetings/{meeting_id}/export/markdown?node=ai-4&depth=one_liner")
        assert response.status_code == 200
        assert response.text.startswith("- ")

    def test_note_full_share_requires_owner(self, client):
        meeting_id = create_meeting(client, actor="amy").json()["meeting_id"]
        allowed = client.get(
            f"/v1/meetings/{meeting_id}/export/markdown?node=ai-4&depth=full",
            headers={"X-Actor": "amy"},
        )
        assert allowed.status_code == 200
        assert "  > " in allowed.text
        denied = client.get(
            f"/v1/meetings/{meeting_id}/export/markdown?node=ai-4&depth=full",
            headers={"X-Actor": "eve"},
        )
        assert denied.status_code == 403

    def test_unknown_node_404(self, client):
        meeting_id = create_meeting(client).json()["meeting_id"]
        response = client.get(f"/v1/meetings/{meeting_id}/export/markdown?node=zzz&depth=notes")
        assert response.status_code == 404


class TestUtterancesPrivacy:
    def test_owner_reads_context_span(self, client):
        meeting_id = create_meeting(client, actor="amy").json()["meeting_id"]
        response = client.get(
            f"/v1/meetings/{meeting_id}/utterances?start=1&end=7", headers={"X-Actor": "amy"}
        )
        assert response.status_code == 200
        utterances = response.json()["utterances"]
        assert [u["index"] for u in utterances] == [1, 2, 3, 4, 5, 6, 7]

    def test_non_owner_denied(self, client):
        meeting_id = create_meeting(client, actor="amy").json()["meeting_id"]
        response = client.get(f"/v1/meetings/{meeting_id}/utterances", headers={"X-Actor": "eve"})
        assert response.status_code == 403


class TestAuthToken:
    def test_bearer_required_when_configured(self):
        app = create_app(AppConfig(auth_token="hunter2"))
        client = TestClient(app)
        assert client.post("/v1/meetings", content=b"Amy: hi there").status_code == 401
        ok = client.post(
            "/v1/meetings",
            content=SURVEY_LINES.encode(),
            headers={"Authorization": "Bearer hunter2"},
        )
        assert ok.status_code == 201


class TestFileStoreBacked:
    def test_full_cycle_survives_restart(self, tmp_path):
        config = AppConfig(data_dir=str(tmp_path / "data"))
        app = create_app(config)
        client = TestClient(app)
        meeting_id = create_meeting(client).json()["meeting_id"]
        client.post(
            f"/v1/meetings/{meeting_id}/events",
            json={
                "base_version": 1,
                "action": "edit_note",
                "payload": {"note_id": "ai-4", "summary": "Persisted edit."},
            },
        )
        # A second app over the same directory sees the same state.
        reopened = TestClient(create_app(AppConfig(data_dir=str(tmp_path / "data"))))
        recap = reopened.get(f"/v1/meetings/{meeting_id}/recap")
        assert recap.status_code == 200
        assert recap.json()["version"] == 2
        training = reopened.get(
            f"/v1/meetings/{meeting_id}/export/training", headers={"X-Actor": "amy"}
        )
        assert "Persisted edit." in training.text


class TestStores:
    def test_event_positions_append_only(self, tmp_path, survey_transcript):
        from recap.feedback import SHARE, FeedbackEvent
        from recap.store import MeetingMeta, MemoryStore

        for store in (MemoryStore(), FileStore(tmp_path / "s")):
            meta = MeetingMeta(meeting_id="m1", owner="amy", created_at="2026-08-10T00:00:00Z")
            store.create_meeting(meta, survey_transcript)
            for i in range(3):
                ev = FeedbackEvent(
                    event_id=f"e{i}",
                    meeting_id="m1",
                    actor="amy",
                    at="2026-08-10T00:00:00Z",
                    base_version=1 + i,
                    action=SHARE,
                    payload={"node_id": "x"},
                )
                assert store.append_event("m1", ev) == i
            assert [e.event_id for e in store.events("m1")] == ["e0", "e1", "e2"]
            assert store.get_transcript("m1") == survey_transcript

    def test_unknown_meeting_raises(self, tmp_path):
        from recap.store import FileStore, MemoryStore, UnknownMeeting

        for store in (MemoryStore(), FileStore(tmp_path / "u")):
            with pytest.raises(UnknownMeeting):
                store.get_meta("missing")
