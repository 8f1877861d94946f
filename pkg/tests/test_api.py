import json

import pytest
from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from breakout.api import create_app
from breakout.service import MeetingService

from .helpers import ManualClock, canonical, steady_volume

TOKEN = "sekrit"
AUTH = {"Authorization": f"Bearer {TOKEN}"}


@pytest.fixture
def clock():
    return ManualClock(1_000_000)


@pytest.fixture
def service(tmp_path, clock):
    return MeetingService(tmp_path, clock=clock)


@pytest.fixture
def client(service):
    app = create_app(service, TOKEN, ws_buffer=8)
    with TestClient(app) as client:
        yield client


def create_session(client, body=None):
    resp = client.post("/v1/sessions", json=body or {}, headers=AUTH)
    assert resp.status_code == 201
    return resp.json()["session_id"]


def test_healthz_needs_no_token(client):
    assert client.get("/v1/healthz").json() == {"status": "ok"}


def test_everything_else_rejects_missing_or_bad_tokens(client):
    sid = create_session(client)
    checks = [
        ("post", "/v1/sessions", {}),
        ("post", f"/v1/sessions/{sid}/participants", {"participant_id": "a"}),
        ("delete", f"/v1/sessions/{sid}/participants/a", None),
        ("post", f"/v1/sessions/{sid}/samples", {"samples": []}),
        ("get", f"/v1/sessions/{sid}/stats", None),
        ("get", f"/v1/sessions/{sid}/mediator", None),
        ("get", f"/v1/sessions/{sid}/segments?from=0&to=1", None),
        ("delete", f"/v1/sessions/{sid}", None),
    ]
    for method, url, body in checks:
        kw = {"json": body} if body is not None else {}
        assert getattr(client, method)(url, **kw).status_code == 401, url
        kw["headers"] = {"Authorization": "Bearer wrong"}
        assert getattr(client, method)(url, **kw).status_code == 401, url


def test_create_session_defaults_and_invalid_config(client):
    assert client.post("/v1/sessions", json={}, headers=AUTH).status_code == 201
    resp = client.post("/v1/sessions", json={"segmenter": {"volume_threshold": 1.5}}, headers=AUTH)
    assert resp.status_code == 422
    assert "volume_threshold out of (0,1)" in resp.json()["violations"]


def test_join_leave_lifecycle_and_conflicts(client, service):
    sid = create_session(client)
    assert client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH).status_code == 204
    assert client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH).status_code == 409
    assert client.delete(f"/v1/sessions/{sid}/participants/b", headers=AUTH).status_code == 409
    assert client.delete(f"/v1/sessions/{sid}/participants/a", headers=AUTH).status_code == 204
    events = []
    service.store.replay(sid, events.append)
    kinds = [e["kind"] for e in events]
    assert kinds.count("PARTICIPANT_EVENT") == 2


def test_seventeenth_join_rejected(client):
    sid = create_session(client)
    for i in range(16):
        assert client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": f"p{i}"}, headers=AUTH).status_code == 204
    resp = client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "p16"}, headers=AUTH)
    assert resp.status_code == 422


def test_sample_batch_reports_accept_and_drop_counts(client):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)
    batch = steady_volume("a", 0, 1950, 0.8)  # 40 samples
    resp = client.post(f"/v1/sessions/{sid}/samples", json={"samples": batch}, headers=AUTH)
    assert resp.json() == {"accepted": 40, "dropped": 0}

    mixed = steady_volume("a", 2000, 2100, 0.8)
    mixed.append({"participant": "a", "t": 2200, "volume": 1.7})
    mixed.append({"participant": "nobody", "t": 2300, "volume": 0.4})
    resp = client.post(f"/v1/sessions/{sid}/samples", json={"samples": mixed}, headers=AUTH)
    assert resp.json() == {"accepted": 3, "dropped": 2}


def test_malformed_batch_is_422(client):
    sid = create_session(client)
    resp = client.post(f"/v1/sessions/{sid}/samples", json={"samples": [{"participant": "a"}]}, headers=AUTH)
    assert resp.status_code == 422
    assert client.post(f"/v1/sessions/{sid}/samples", json={}, headers=AUTH).status_code == 422


def test_unknown_session_is_404(client):
    assert client.get("/v1/sessions/zzz/stats", headers=AUTH).status_code == 404
    assert client.post("/v1/sessions/zzz/samples", json={"samples": []}, headers=AUTH).status_code == 404


def test_storage_failure_surfaces_as_503(client, service, monkeypatch):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)

    def broken(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(service.store, "append", broken)
    resp = client.post(
        f"/v1/sessions/{sid}/samples", json={"samples": steady_volume("a", 0, 500, 0.9)}, headers=AUTH
    )
    assert resp.status_code == 503


def test_accepted_ingestion_durable_before_response(client, service, tmp_path):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)
    client.post(f"/v1/sessions/{sid}/samples", json={"samples": steady_volume("a", 0, 500, 0.9)}, headers=AUTH)
    lines = (tmp_path / f"events-{sid}.jsonl").read_text().splitlines()
    last = json.loads(lines[-1])
    assert last["kind"] == "SAMPLE_BATCH"
    assert len(last["payload"]["samples"]) == 11


def test_pre_first_tick_reads_return_zeroed_stats(client, clock):
    sid = create_session(client)
    stats = client.get(f"/v1/sessions/{sid}/stats", headers=AUTH).json()
    assert stats["tick"] == clock.now()
    assert stats["participants_present"] == []
    frame = client.get(f"/v1/sessions/{sid}/mediator", headers=AUTH).json()
    assert frame["ball"]["intensity"] == 0.0


def test_segments_endpoint_delegates_and_validates(client, service):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)
    client.post(f"/v1/sessions/{sid}/samples", json={"samples": steady_volume("a", 0, 900, 0.9)}, headers=AUTH)
    client.delete(f"/v1/sessions/{sid}/participants/a", headers=AUTH)
    resp = client.get(f"/v1/sessions/{sid}/segments", params={"from": 0, "to": 5000}, headers=AUTH)
    assert resp.json() == [{"participant": "a", "start": 0, "end": 900}]
    assert client.get(f"/v1/sessions/{sid}/segments", params={"from": 9, "to": 9}, headers=AUTH).status_code == 422
    assert client.get(f"/v1/sessions/{sid}/segments", headers=AUTH).status_code == 422


def test_get_stats_equals_latest_stream_envelope_bytes(client, service):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)
    client.post(f"/v1/sessions/{sid}/samples", json={"samples": steady_volume("a", 0, 3000, 0.8)}, headers=AUTH)
    client.delete(f"/v1/sessions/{sid}/participants/a", headers=AUTH)

    with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as ws:
        ws.receive_text()  # snapshot stats
        ws.receive_text()  # snapshot frame
        service.tick_session(sid)
        envelopes = [json.loads(ws.receive_text()) for _ in range(2)]

    stats_env = next(e for e in envelopes if e["type"] == "stats")
    rest = client.get(f"/v1/sessions/{sid}/stats", headers=AUTH)
    assert canonical(rest.json()) == canonical(stats_env["payload"])
    frame_env = next(e for e in envelopes if e["type"] == "frame")
    rest_frame = client.get(f"/v1/sessions/{sid}/mediator", headers=AUTH)
    assert canonical(rest_frame.json()) == canonical(frame_env["payload"])


def test_subscribers_see_identical_ordered_streams(client, service):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)

    with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as ws1:
        with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as ws2:
            service.tick_session(sid)
            service.tick_session(sid)
            got1 = [json.loads(ws1.receive_text()) for _ in range(6)]
            got2 = [json.loads(ws2.receive_text()) for _ in range(6)]
    assert got1 == got2
    seqs = [e["seq"] for e in got1]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)
    assert {e["type"] for e in got1} == {"stats", "frame"}


def test_subscription_streams_joins_and_ticks_in_seq_order(client, service):
    sid = create_session(client)
    with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as ws:
        client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "zed"}, headers=AUTH)
        service.tick_session(sid)
        got = [json.loads(ws.receive_text()) for _ in range(5)]
    assert [e["type"] for e in got] == ["stats", "frame", "participant_event", "stats", "frame"]
    assert got[2]["payload"]["participant"] == "zed"
    assert got[2]["payload"]["kind"] == "JOIN"
    live_seqs = [e["seq"] for e in got[2:]]
    assert live_seqs == sorted(live_seqs)


def test_websocket_rejects_bad_token_with_policy_violation(client):
    with pytest.raises(WebSocketDisconnect) as exc:
        with client.websocket_connect("/v1/sessions/any/stream?token=wrong") as ws:
            ws.receive_text()
    assert exc.value.code == 1008


def test_websocket_rejects_unknown_session(client):
    with pytest.raises(WebSocketDisconnect) as exc:
        with client.websocket_connect(f"/v1/sessions/ghost/stream?token={TOKEN}") as ws:
            ws.receive_text()
    assert exc.value.code == 1008


def test_websocket_negotiates_subprotocol(client):
    sid = create_session(client)
    with client.websocket_connect(
        f"/v1/sessions/{sid}/stream?token={TOKEN}", subprotocols=["breakout.v1"]
    ) as ws:
        assert ws.accepted_subprotocol == "breakout.v1"
        ws.receive_text()


def test_slow_consumer_disconnected_others_unaffected(client, service):
    sid = create_session(client)
    with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as slow:
        slow.receive_text(), slow.receive_text()
        with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as fine:
            fine.receive_text(), fine.receive_text()
            victim = service._runtime(sid).subscribers[0]
            # Saturate the victim's bounded buffer beyond capacity.
            for i in range(20):
                victim.offer({"type": "stats", "session": sid, "seq": 100 + i, "payload": {}})
            assert victim.dead
            service.tick_session(sid)  # fan-out drops the dead subscriber
            assert service.subscriber_count(sid) == 1
            with pytest.raises(WebSocketDisconnect) as exc:
                for _ in range(50):
                    slow.receive_text()
            assert exc.value.code == 1013
            got = [json.loads(fine.receive_text()) for _ in range(2)]
            assert [e["type"] for e in got] == ["stats", "frame"]


def test_close_session_closes_stream_and_blocks_ingestion(client, service):
    sid = create_session(client)
    client.post(f"/v1/sessions/{sid}/participants", json={"participant_id": "a"}, headers=AUTH)
    with client.websocket_connect(f"/v1/sessions/{sid}/stream?token={TOKEN}") as ws:
        ws.receive_text(), ws.receive_text()
        assert client.delete(f"/v1/sessions/{sid}", headers=AUTH).status_code == 204
        with pytest.raises(WebSocketDisconnect) as exc:
            for _ in range(10):
                ws.receive_text()
        assert exc.value.code == 1000
    resp = client.post(f"/v1/sessions/{sid}/samples", json={"samples": []}, headers=AUTH)
    assert resp.status_code == 409
    # Reads still work on a closed session.
    assert client.get(f"/v1/sessions/{sid}/stats", headers=AUTH).status_code == 200
