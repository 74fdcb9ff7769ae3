import csv
import json

import numpy as np
import pytest

from gridlayout.cli import emit_svg, main, random_graph
from gridlayout.graph import Graph, GridSpec, LayoutState, Node


@pytest.fixture()
def graph_file(tmp_path):
    doc = {
        "nodes": [
            {"id": "a", "w": 40, "h": 30},
            {"id": "b", "w": 40, "h": 30},
            {"id": "c", "w": 40, "h": 30},
        ],
        "edges": [["a", "b"], ["b", "c"]],
    }
    p = tmp_path / "tri.json"
    p.write_text(json.dumps(doc))
    return p


class TestMain:
    def test_single_graph_fd(self, graph_file, tmp_path, capsys):
        out = tmp_path / "out"
        csv_path = tmp_path / "all.csv"
        code = main([str(graph_file), "--mode", "FD", "--out", str(out), "--csv", str(csv_path)])
        assert code == 0
        assert (out / "tri.FD.svg").exists()
        metrics = json.loads((out / "tri.FD.metrics.json").read_text())
        assert {"p_stress", "crossings", "obliqueness", "wall_times"} <= metrics.keys()
        rows = list(csv.DictReader(csv_path.open()))
        assert len(rows) == 1
        assert rows[0]["name"] == "tri"
        assert rows[0]["mode"] == "FD"
        assert rows[0]["nodes"] == "3"

    def test_multiple_modes(self, graph_file, tmp_path):
        out = tmp_path / "out"
        code = main([str(graph_file), "--mode", "FD,GS", "--out", str(out)])
        assert code == 0
        assert (out / "tri.FD.svg").exists()
        assert (out / "tri.GS.svg").exists()

    def test_unknown_mode_usage_error(self, graph_file):
        assert main([str(graph_file), "--mode", "BOGUS"]) == 2

    def test_no_inputs_usage_error(self):
        assert main(["--mode", "FD"]) == 2

    def test_gen_random(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["--gen-random", "2", "--seed", "3", "--mode", "FD", "--out", str(out)]
        )
        assert code == 0
        assert (out / "random000.FD.svg").exists()
        assert (out / "random001.FD.svg").exists()

    def test_invalid_graph_fails(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert main([str(bad), "--mode", "FD"]) == 1

    def test_failure_removes_partial_outputs(self, tmp_path, monkeypatch):
        doc = {
            "nodes": [{"id": "a", "w": 40, "h": 30}, {"id": "b", "w": 40, "h": 30}],
            "edges": [["a", "b"]],
        }
        p = tmp_path / "two.json"
        p.write_text(json.dumps(doc))
        out = tmp_path / "out"

        import gridlayout.cli as cli

        def boom(*a, **kw):
            raise RuntimeError("metrics exploded")

        monkeypatch.setattr(cli, "compute_report", boom)
        assert main([str(p), "--mode", "FD", "--out", str(out)]) == 1
        assert not list(out.glob("*")) if out.exists() else True

    def test_directory_input(self, graph_file, tmp_path):
        code = main([str(graph_file.parent), "--mode", "FD"])
        assert code == 0


class TestEmitSvg:
    def test_one_node(self):
        g = Graph([Node("a", 40, 30)], [])
        s = LayoutState(np.array([0.0]), np.array([0.0]))
        svg = emit_svg(g, s).decode()
        assert svg.count("<rect") == 1
        assert "<svg" in svg

    def test_grid_lines(self):
        g = Graph([Node("a", 10, 10), Node("b", 10, 10)], [])
        s = LayoutState(np.array([0.0, 100.0]), np.array([0.0, 0.0]))
        svg = emit_svg(g, s, grid=GridSpec(50.0)).decode()
        assert 'x1="50.00"' in svg
        assert 'y1="0.00"' in svg

    def test_byte_identical(self, graph_file, tmp_path):
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        main([str(graph_file), "--mode", "NS", "--out", str(out1), "--seed", "5"])
        main([str(graph_file), "--mode", "NS", "--out", str(out2), "--seed", "5"])
        a = (out1 / "tri.NS.svg").read_bytes()
        b = (out2 / "tri.NS.svg").read_bytes()
        assert a == b


class TestRandomGraph:
    def test_size_band(self):
        for seed in range(5):
            g = random_graph(seed, 10, 20)
            assert 10 <= g.n <= 20
            assert len(g.edges) <= int(1.5 * g.n)

    def test_deterministic(self):
        a = random_graph(4)
        b = random_graph(4)
        assert a.to_document() == b.to_document()
