import json

from starlette.testclient import TestClient

from gridlayout.service import _coalesce, app


GRAPH = {
    "nodes": [{"id": "a", "w": 20, "h": 10}, {"id": "b", "w": 20, "h": 10}],
    "edges": [["a", "b"]],
}


class TestCoalesce:
    def test_run_of_moves_keeps_latest(self):
        msgs = [
            {"t": "drag_start", "id": "a"},
            {"t": "drag_move", "x": 1, "y": 1},
            {"t": "drag_move", "x": 2, "y": 2},
            {"t": "drag_move", "x": 3, "y": 3},
            {"t": "drag_end"},
        ]
        out = _coalesce(msgs)
        assert [m["t"] for m in out] == ["drag_start", "drag_move", "drag_end"]
        assert out[1]["x"] == 3

    def test_interrupted_runs_kept_separately(self):
        msgs = [
            {"t": "drag_move", "x": 1, "y": 1},
            {"t": "constraint_del", "cid": 1},
            {"t": "drag_move", "x": 2, "y": 2},
        ]
        assert len(_coalesce(msgs)) == 3

    def test_empty(self):
        assert _coalesce([]) == []


def recv(ws):
    return json.loads(ws.receive_text())


class TestWebSocket:
    def test_load_returns_snapshot_then_constraints(self):
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"t": "load", "graph": GRAPH}))
                snap = recv(ws)
                assert snap["t"] == "snapshot"
                assert set(snap["positions"]) == {"a", "b"}
                assert recv(ws)["t"] == "constraints"

    def test_solve_stream_converges_with_metrics(self):
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"t": "load", "graph": GRAPH}))
                last_rev = 0
                for _ in range(5000):
                    event = recv(ws)
                    if event["t"] == "snapshot":
                        assert event["rev"] > last_rev
                        last_rev = event["rev"]
                        if event["converged"]:
                            break
                    else:
                        assert event["t"] == "constraints"
                else:
                    raise AssertionError("never converged")
                assert recv(ws)["t"] == "metrics"

    def test_invalid_json_is_error_event(self):
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text("{nope")
                assert recv(ws)["t"] == "error"

    def test_save_round_trip(self):
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_text(json.dumps({"t": "load", "graph": GRAPH}))
                ws.send_text(json.dumps({"t": "save"}))
                for _ in range(5000):
                    event = recv(ws)
                    if event["t"] == "save":
                        assert event["graph"]["nodes"] == GRAPH["nodes"]
                        assert set(event["positions"]) == {"a", "b"}
                        break
                else:
                    raise AssertionError("no save event")
