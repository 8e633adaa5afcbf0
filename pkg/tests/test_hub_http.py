import json
import threading
import time

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from fruitpal.hub import CloudHub, MessageKind
from fruitpal.hub_http import create_app


def publish_body(msg_id: str, kind="DeviceStatus", device_id="fp-1", at=0, payload=None):
    return {
        "msg_id": msg_id,
        "kind": kind,
        "device_id": device_id,
        "payload": payload if payload is not None else {"status": "online"},
        "published_at": at,
    }


def alert_payload(alert_id: str, at=0):
    return {
        "alert_id": alert_id,
        "person_id": "sam",
        "fruit": "Lemon",
        "confidence": 0.8,
        "message": "Allergen detected – danger present",
        "raised_at": at,
    }


@pytest.fixture
def hub():
    return CloudHub(start_date="2024-05-01")


@pytest.fixture
def client(hub):
    with TestClient(create_app(hub)) as c:
        yield c


class TestHealth:
    def test_healthz_reports_log_length(self, client):
        assert client.get("/healthz").json() == {"status": "ok", "messages": 0}
        client.post("/messages", json=publish_body("m1"))
        assert client.get("/healthz").json()["messages"] == 1


class TestPublish:
    def test_new_message_gets_201(self, client):
        response = client.post("/messages", json=publish_body("m1"))
        assert response.status_code == 201
        body = response.json()
        assert body["seq"] == 1
        assert body["duplicate"] is False

    def test_duplicate_gets_200_with_original_seq(self, client):
        client.post("/messages", json=publish_body("m1"))
        response = client.post("/messages", json=publish_body("m1"))
        assert response.status_code == 200
        body = response.json()
        assert body["seq"] == 1
        assert body["duplicate"] is True

    def test_invalid_payload_gets_400(self, client):
        bad = publish_body("m1", kind="AlertRaised", payload={"alert_id": "x"})
        assert client.post("/messages", json=bad).status_code == 400

    def test_unknown_kind_gets_400(self, client):
        assert (
            client.post("/messages", json=publish_body("m1", kind="Carrier")).status_code
            == 400
        )


class TestAck:
    def test_ack_round_trip(self, client, hub):
        client.post(
            "/messages",
            json=publish_body(
                "a1", kind="AlertRaised", payload=alert_payload("fp-1-alert-1")
            ),
        )
        response = client.post(
            "/alerts/fp-1-alert-1/ack", json={"caregiver_id": "dana"}
        )
        assert response.status_code == 200
        assert response.json()["msg_id"] == "ack-fp-1-alert-1-dana"
        msg = hub.get_by_msg_id("ack-fp-1-alert-1-dana")
        assert msg.kind is MessageKind.CAREGIVER_ACK

    def test_unknown_alert_gets_404(self, client):
        response = client.post("/alerts/nope/ack", json={"caregiver_id": "dana"})
        assert response.status_code == 404


class TestPoll:
    def test_cursor_pagination(self, client):
        for k in range(5):
            client.post("/messages", json=publish_body(f"m{k}", at=k))
        first = client.get("/messages", params={"after": 0, "limit": 3}).json()
        assert [m["msg_id"] for m in first["messages"]] == ["m0", "m1", "m2"]
        assert first["cursor"] == 3
        rest = client.get("/messages", params={"after": first["cursor"]}).json()
        assert [m["msg_id"] for m in rest["messages"]] == ["m3", "m4"]

    def test_kind_filter(self, client):
        client.post("/messages", json=publish_body("m1"))
        client.post(
            "/messages",
            json=publish_body("a1", kind="AlertRaised", payload=alert_payload("x-1")),
        )
        out = client.get("/messages", params={"kinds": "AlertRaised"}).json()
        assert [m["msg_id"] for m in out["messages"]] == ["a1"]

    def test_bad_kind_gets_400(self, client):
        assert client.get("/messages", params={"kinds": "Nope"}).status_code == 400

    def test_empty_poll_keeps_cursor(self, client):
        out = client.get("/messages", params={"after": 7}).json()
        assert out == {"messages": [], "cursor": 7}


class LiveServer:
    """The app on a real uvicorn server; the buffered test client cannot
    exercise an unbounded event stream."""

    def __init__(self, hub: CloudHub):
        config = uvicorn.Config(
            create_app(hub), host="127.0.0.1", port=0, log_level="warning"
        )
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self) -> str:
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server failed to start")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture
def live_url(hub):
    with LiveServer(hub) as url:
        yield url


def read_sse_events(url, params=None, headers=None, max_events=10):
    """Collect up to max_events from the push stream, then disconnect."""
    events = []
    current: dict = {}
    with httpx.stream(
        "GET", f"{url}/stream", params=params, headers=headers, timeout=10
    ) as response:
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/event-stream")
        for line in response.iter_lines():
            if line.startswith("id:"):
                current["id"] = int(line.split(":", 1)[1].strip())
            elif line.startswith("data:"):
                current["data"] = json.loads(line.split(":", 1)[1].strip())
            elif line == "" and current:
                events.append(current)
                current = {}
                if len(events) >= max_events:
                    break
    return events


class TestStream:
    def test_events_carry_seq_ids_and_push_live(self, hub, live_url):
        for k in range(3):
            httpx.post(f"{live_url}/messages", json=publish_body(f"m{k}", at=k))
        collected = []
        done = threading.Event()

        def consume():
            collected.extend(read_sse_events(live_url, max_events=4))
            done.set()

        reader = threading.Thread(target=consume, daemon=True)
        reader.start()
        time.sleep(0.3)  # reader is connected and has drained the backlog
        httpx.post(f"{live_url}/messages", json=publish_body("live", at=9))
        assert done.wait(timeout=10), "stream never delivered the live message"
        assert [e["id"] for e in collected] == [1, 2, 3, 4]
        assert [e["data"]["msg_id"] for e in collected] == ["m0", "m1", "m2", "live"]

    def test_after_param_skips_delivered_messages(self, live_url):
        for k in range(3):
            httpx.post(f"{live_url}/messages", json=publish_body(f"m{k}", at=k))
        events = read_sse_events(live_url, params={"after": 2}, max_events=1)
        assert [e["id"] for e in events] == [3]

    def test_last_event_id_resumes_and_wins_over_after(self, live_url):
        for k in range(4):
            httpx.post(f"{live_url}/messages", json=publish_body(f"m{k}", at=k))
        events = read_sse_events(
            live_url, params={"after": 0}, headers={"Last-Event-ID": "3"}, max_events=1
        )
        assert [e["id"] for e in events] == [4]

    def test_kind_filter(self, live_url):
        httpx.post(f"{live_url}/messages", json=publish_body("m1"))
        httpx.post(
            f"{live_url}/messages",
            json=publish_body("a1", kind="AlertRaised", payload=alert_payload("x-1")),
        )
        events = read_sse_events(live_url, params={"kinds": "AlertRaised"}, max_events=1)
        assert [e["data"]["msg_id"] for e in events] == ["a1"]


class TestTokenGuard:
    @pytest.fixture
    def guarded(self, hub):
        with TestClient(create_app(hub, client_token="sekrit")) as c:
            yield c

    def test_healthz_stays_open(self, guarded):
        assert guarded.get("/healthz").status_code == 200

    def test_missing_token_gets_401(self, guarded):
        assert guarded.post("/messages", json=publish_body("m1")).status_code == 401
        assert guarded.get("/messages").status_code == 401

    def test_correct_token_passes(self, guarded):
        response = guarded.post(
            "/messages",
            json=publish_body("m1"),
            headers={"x-client-token": "sekrit"},
        )
        assert response.status_code == 201
