#!/usr/bin/env python3
"""
Tests for the boundary graph, the Dirichlet Laplacian and the domination check
"""

import io
import math
import sys
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from dirichlet_graph import (build_boundary_graph, dirichlet_laplacian, domination_check,
                             graph_ground_state, lambda_min_graph)
from settings import SolverSettings


class TestBoundaryGraph:
    """Vertices and edges of G-bar"""

    def test_two_boxes_two_rows(self):
        graph = build_boundary_graph(2, 2)
        assert graph.interior.tolist() == [[2, 0], [1, 1]]
        assert graph.boundary.tolist() == [[0, 2], [3, -1]]
        assert nx.is_isomorphic(graph.to_networkx(), nx.path_graph(4))

    def test_scaled_points(self):
        graph = build_boundary_graph(2, 2)
        assert np.allclose(graph.scaled_points()[:2], [[1.0, 0.0], [0.5, 0.5]])

    def test_two_rows_is_a_path(self):
        for n in (4, 7, 12):
            graph = build_boundary_graph(n, 2)
            assert graph.boundary.shape[0] == 2
            assert nx.is_isomorphic(graph.to_networkx(), nx.path_graph(graph.vertex_count))
        assert build_boundary_graph(4, 2).interior_count == 3

    def test_three_rows_full_degree(self):
        graph = build_boundary_graph(3, 3)
        assert graph.interior.tolist() == [[3, 0, 0], [2, 1, 0], [1, 1, 1]]
        assert graph.degrees()[:3].tolist() == [6, 6, 6]

    def test_interior_degree_is_full(self):
        for d in (2, 3, 4):
            graph = build_boundary_graph(8, d)
            assert (graph.degrees()[:graph.interior_count] == d * (d - 1)).all()

    def test_boundary_edges_included(self):
        # the halo of a d=3 lattice contains adjacent boundary pairs
        graph = build_boundary_graph(6, 3)
        interior = graph.interior_count
        boundary_pairs = [(a, b) for a, b in graph.edges.tolist() if a >= interior and b >= interior]
        assert boundary_pairs

    def test_edges_are_single_shifts(self):
        graph = build_boundary_graph(7, 3)
        points = graph.points
        for a, b in graph.edges.tolist():
            diff = points[a] - points[b]
            assert sorted(diff.tolist()) == [-1, 0, 1]

    def test_dump_edges(self):
        stream = io.StringIO()
        build_boundary_graph(2, 2).dump_edges(stream)
        lines = stream.getvalue().splitlines()
        assert len(lines) == 3
        assert "2,0 1,1" in lines


class TestLaplacian:
    """L_{n,d} and its smallest eigenvalue"""

    def test_two_boxes_two_rows(self):
        L = dirichlet_laplacian(2, 2).matrix.to_dense()
        assert L.tolist() == [[2, -1], [-1, 2]]

    def test_three_boxes_three_rows(self):
        L = dirichlet_laplacian(3, 3).matrix.to_dense()
        assert L.tolist() == [[6, -1, 0], [-1, 6, -1], [0, -1, 6]]

    def test_two_rows_tridiagonal(self):
        L = dirichlet_laplacian(9, 2).matrix.to_dense()
        assert (np.diag(L) == 2).all()
        assert np.array_equal(L, np.triu(np.tril(L, 1), -1))

    def test_lambda_min_closed_forms(self):
        assert lambda_min_graph(4, 2) == pytest.approx(2 - math.sqrt(2), abs=1e-12)
        assert lambda_min_graph(2, 2) == pytest.approx(1.0, abs=1e-12)
        assert lambda_min_graph(3, 3) == pytest.approx(6 - math.sqrt(2), abs=1e-12)

    def test_two_rows_path_spectrum(self):
        n = 30
        m = n // 2 + 1
        assert lambda_min_graph(n, 2) == pytest.approx(2 - 2 * math.cos(math.pi / (m + 1)), abs=1e-10)

    def test_ground_state_pair(self):
        ground = graph_ground_state(12, 3)
        L = dirichlet_laplacian(12, 3).matrix.to_dense().astype(float)
        assert ground.value == pytest.approx(lambda_min_graph(12, 3), abs=1e-12)
        assert np.linalg.norm(L @ ground.vector - ground.value * ground.vector) < 1e-8
        assert (ground.vector > -1e-12).all()

    def test_scaled_lambda_min_settles(self):
        values = np.array([n * n * lambda_min_graph(n, 2) for n in range(50, 401, 50)])
        assert np.all(np.diff(values) > 0)
        assert values.std() / values.mean() < 0.1

    @pytest.mark.slow
    def test_scaled_lambda_min_settles_three_rows(self):
        values = np.array([n * n * lambda_min_graph(n, 3) for n in range(50, 401, 50)])
        assert values.std() / values.mean() < 0.1


class TestDomination:
    """d^2 (1 - M_est) - L_{n,d} >= 0"""

    def test_two_boxes_two_rows(self):
        report = domination_check(2, 2)
        assert report.offdiagonal_equal
        assert report.diagonal_slack == [0, 1]
        assert report.psd_checked and report.is_psd
        assert report.passed

    def test_three_boxes_three_rows(self):
        report = domination_check(3, 3)
        assert report.diagonal_slack == [1, 0, 2]
        assert report.passed

    def test_small_lattices(self):
        for d in (2, 3):
            for n in range(1, 13):
                assert domination_check(n, d).passed, f"n={n}, d={d}"

    def test_dense_step_skipped_above_cap(self):
        report = domination_check(40, 3, settings=SolverSettings(dense_cap=10))
        assert not report.psd_checked
        assert report.is_psd is None
        assert report.offdiagonal_equal and report.diagonal_ok
        assert report.passed
