import math

import numpy as np
import pytest

from gridlayout.graph import Graph, GridSpec, LayoutState, Node, shortest_path_distances
from gridlayout.metrics import (
    MFunction,
    MetricsReport,
    angular_resolution,
    compute_report,
    edge_angle,
    edge_crossings,
    edge_node_overlaps,
    grid_placement,
    obliqueness,
)

from oracles import shapely_crossings, shapely_segment_box


def make_graph(n, edges, w=10.0, h=10.0):
    return Graph([Node(str(i), w, h) for i in range(n)], [(str(a), str(b)) for a, b in edges])


def layout(xs, ys):
    return LayoutState(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))


class TestMFunction:
    def test_anchors(self):
        m = MFunction()
        assert m(0.0) == 0.0
        assert m(math.pi / 2) == 0.0
        assert m(math.pi / 4) == 10.0
        assert m(math.pi / 36) == 100.0
        assert m(math.pi / 2 - math.pi / 36) == 100.0

    def test_piecewise_linear_midpoint(self):
        m = MFunction()
        mid = 0.5 * (math.pi / 36 + math.pi / 4)
        assert m(mid) == pytest.approx(55.0)

    def test_symmetric_about_quarter_pi(self):
        m = MFunction()
        for t in (0.1, 0.3, 0.6):
            assert m(t) == pytest.approx(m(math.pi / 2 - t))


class TestEdgeAngle:
    def test_horizontal(self):
        s = layout([0, 10], [0, 0])
        assert edge_angle(s, 0, 1) == 0.0

    def test_vertical(self):
        s = layout([0, 0], [0, 10])
        assert edge_angle(s, 0, 1) == pytest.approx(math.pi / 2)

    def test_degenerate(self):
        s = layout([3, 3], [4, 4])
        assert edge_angle(s, 0, 1) == 0.0


class TestCrossings:
    def test_k4_convex(self):
        g = make_graph(4, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3)])
        s = layout([0, 10, 10, 0], [0, 0, 10, 10])
        assert edge_crossings(g, s) == 1

    def test_straight_path(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        s = layout([0, 10, 20], [0, 0, 0])
        assert edge_crossings(g, s) == 0

    def test_shared_endpoint_not_counted(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        s = layout([0, 10, 0], [0, 0, 1])
        assert edge_crossings(g, s) == 0

    def test_collinear_overlap_counted(self):
        g = make_graph(4, [(0, 1), (2, 3)])
        s = layout([0, 10, 5, 15], [0, 0, 0, 0])
        assert edge_crossings(g, s) == 1

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_shapely(self, seed):
        rng = np.random.default_rng(seed)
        n = 8
        edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4]
        g = make_graph(n, edges)
        s = layout(rng.uniform(0, 100, n), rng.uniform(0, 100, n))
        pts = [(float(s.x[i]), float(s.y[i])) for i in range(n)]
        assert edge_crossings(g, s) == shapely_crossings(pts, g.edges)


class TestEdgeNodeOverlaps:
    def test_through_center(self):
        g = make_graph(3, [(0, 1)])
        s = layout([0, 20, 10], [0, 0, 0])
        assert edge_node_overlaps(g, s) == 1

    def test_endpoints_excluded(self):
        g = make_graph(2, [(0, 1)])
        s = layout([0, 5], [0, 0])
        assert edge_node_overlaps(g, s) == 0

    def test_tangent_counts(self):
        # box edge at y=5 exactly touched by the segment
        g = make_graph(3, [(0, 1)])
        s = layout([0, 20, 10], [5, 5, 0])
        assert edge_node_overlaps(g, s) == 1

    def test_clear_miss(self):
        g = make_graph(3, [(0, 1)])
        s = layout([0, 20, 10], [0, 0, 30])
        assert edge_node_overlaps(g, s) == 0

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_shapely(self, seed):
        rng = np.random.default_rng(seed + 500)
        n = 7
        edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.4]
        g = make_graph(n, edges, w=12.0, h=8.0)
        s = layout(rng.uniform(0, 60, n), rng.uniform(0, 60, n))
        pts = [(float(s.x[i]), float(s.y[i])) for i in range(n)]
        want = 0
        for u, v in g.edges:
            for k in range(n):
                if k in (u, v):
                    continue
                if shapely_segment_box(pts[u], pts[v], pts[k][0], pts[k][1], 12.0, 8.0):
                    want += 1
        assert edge_node_overlaps(g, s) == want


class TestAngularResolution:
    def test_opposite_edges(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        s = layout([0, 10, 20], [0, 0, 0])
        assert angular_resolution(g, s) == pytest.approx(0.0)

    def test_right_angle(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        s = layout([0, 10, 10], [0, 0, 10])
        assert angular_resolution(g, s) == pytest.approx(math.pi / 2)

    def test_star_all_pairs(self):
        # K1,4 at exact 90 degree spacing: adjacent pairs hit the ideal pi/2,
        # the two opposite pairs are pi off by pi/2 each
        g = make_graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
        s = layout([0, 10, 0, -10, 0], [0, 0, 10, 0, -10])
        assert angular_resolution(g, s) == pytest.approx(2 * (math.pi / 2))

    def test_leaf_contributes_nothing(self):
        g = make_graph(2, [(0, 1)])
        s = layout([0, 10], [0, 5])
        assert angular_resolution(g, s) == 0.0


class TestObliqueness:
    def test_all_horizontal(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        s = layout([0, 10, 20], [0, 0, 0])
        assert obliqueness(g, s) == 0.0

    def test_single_diagonal(self):
        g = make_graph(2, [(0, 1)])
        s = layout([0, 10], [0, 10])
        assert obliqueness(g, s) == pytest.approx(10.0)

    def test_angle_delta(self):
        g = make_graph(2, [(0, 1)])
        s = layout([0, 10], [0, 10 * math.tan(math.pi / 36)])
        assert obliqueness(g, s) == pytest.approx(100.0)

    def test_axis_swap_invariant(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        s = layout([0, 7, 20], [0, 13, 4])
        swapped = LayoutState(s.y.copy(), s.x.copy())
        assert obliqueness(g, s) == pytest.approx(obliqueness(g, swapped))

    def test_edgeless(self):
        g = make_graph(2, [])
        assert obliqueness(g, layout([0, 1], [0, 1])) == 0.0


class TestGridPlacement:
    def test_on_grid(self):
        g = make_graph(3, [])
        s = layout([0, 50, 100], [50, 0, -50])
        assert grid_placement(g, s, GridSpec(50)) == 0.0

    def test_single_offender_mean(self):
        g = make_graph(4, [])
        s = layout([25, 50, 100, 0], [0, 0, 0, 0])
        assert grid_placement(g, s, GridSpec(50)) == pytest.approx(25.0 / 4)

    def test_grid_translation_invariant(self):
        g = make_graph(3, [])
        rng = np.random.default_rng(9)
        s = layout(rng.uniform(0, 100, 3), rng.uniform(0, 100, 3))
        t = LayoutState(s.x + 150.0, s.y - 50.0)
        grid = GridSpec(50)
        assert grid_placement(g, s, grid) == pytest.approx(grid_placement(g, t, grid))


class TestInvariances:
    def test_translation(self):
        rng = np.random.default_rng(4)
        g = make_graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3)])
        s = layout(rng.uniform(0, 100, 6), rng.uniform(0, 100, 6))
        t = LayoutState(s.x + 31.4, s.y - 27.1)
        assert edge_crossings(g, s) == edge_crossings(g, t)
        assert edge_node_overlaps(g, s) == edge_node_overlaps(g, t)
        assert angular_resolution(g, s) == pytest.approx(angular_resolution(g, t))
        assert obliqueness(g, s) == pytest.approx(obliqueness(g, t))

    def test_quarter_turn(self):
        rng = np.random.default_rng(5)
        g = make_graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3)])
        s = layout(rng.uniform(0, 100, 6), rng.uniform(0, 100, 6))
        r = LayoutState(-s.y.copy(), s.x.copy())
        assert edge_crossings(g, s) == edge_crossings(g, r)
        assert edge_node_overlaps(g, s) == edge_node_overlaps(g, r)
        assert angular_resolution(g, s) == pytest.approx(angular_resolution(g, r))


class TestReport:
    def test_compute_and_serialize(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        d = shortest_path_distances(g, 50.0)
        s = layout([0, 50, 100], [0, 0, 0])
        rep = compute_report(g, d, s, GridSpec(50), 0.02, {"untangle": 0.1234})
        assert isinstance(rep, MetricsReport)
        doc = rep.to_json()
        assert doc["p_stress"] == 0.0
        assert doc["crossings"] == 0
        assert doc["obliqueness"] == 0.0
        assert doc["grid_placement"] == 0.0
        assert doc["wall_times"] == {"untangle": 0.123}
