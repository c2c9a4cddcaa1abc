#!/usr/bin/env python3
"""
Dirichlet Graph Module
Builds the boundary graph G-bar_{n,d} (scaled Young diagrams plus their
one-shift halo), the interior-restricted Laplacian L_{n,d}, its smallest
eigenvalue, and the domination check L_{n,d} <= d^2 (1 - M_est)
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, TextIO

import networkx as nx
import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel

from estimation import build_m_est
from settings import SolverSettings, resolve
from spectral import EigResult, Extremal, SparseSymMatrix, extremal_eig, psd_check
from young_lattice import LatticeIndex, enumerate_lattice, shift_matrix

logger = logging.getLogger(__name__)


def _point_keys(points: np.ndarray, n: int) -> np.ndarray:
    # halo coordinates range over [-1, n + 1]
    base = n + 3
    keys = np.zeros(points.shape[0], dtype=np.int64)
    for column in range(points.shape[1]):
        keys = keys * base + (points[:, column] + 1)
    return keys


@dataclass
class BoundaryGraph:
    """
    Vertices are integer vectors (mu, not mu/n); interior rows come first in
    lattice order, boundary rows follow in ascending lexicographic order.
    Edges join vertices differing by one f_ij and index into that ordering.
    """
    n: int
    d: int
    interior: np.ndarray
    boundary: np.ndarray
    edges: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return np.vstack([self.interior, self.boundary])

    @property
    def interior_count(self) -> int:
        return int(self.interior.shape[0])

    @property
    def vertex_count(self) -> int:
        return int(self.interior.shape[0] + self.boundary.shape[0])

    def scaled_points(self) -> np.ndarray:
        """Vertex coordinates mu / n"""
        return self.points / self.n

    def degrees(self) -> np.ndarray:
        """Degree of every vertex in the full graph"""
        return np.bincount(self.edges.ravel(), minlength=self.vertex_count)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for k, point in enumerate(self.points):
            graph.add_node(k, point=tuple(int(v) for v in point),
                           boundary=k >= self.interior_count)
        graph.add_edges_from((int(a), int(b)) for a, b in self.edges)
        return graph

    def dump_edges(self, stream: TextIO) -> None:
        """One edge per line: both endpoints as comma-separated integer vectors"""
        points = self.points
        for a, b in self.edges:
            left = ",".join(str(int(v)) for v in points[a])
            right = ",".join(str(int(v)) for v in points[b])
            stream.write(f"{left} {right}\n")


@dataclass
class DirichletLaplacian:
    """L_{n,d}: rows of interior vertices only, degrees counted in the full graph"""
    lattice: LatticeIndex
    matrix: SparseSymMatrix
    degrees: np.ndarray


class DominationReport(BaseModel):
    """Outcome of checking L_{n,d} <= d^2 (1 - M_est(n, d))"""
    n: int
    d: int
    dim: int
    offdiagonal_equal: bool
    diagonal_ok: bool
    diagonal_slack: List[int]
    psd_checked: bool
    is_psd: Optional[bool] = None
    min_eigenvalue: Optional[float] = None
    violation: Optional[List[int]] = None
    witness: Optional[List[float]] = None

    @property
    def passed(self) -> bool:
        return self.offdiagonal_equal and self.diagonal_ok and self.is_psd is not False


def _graph_from_lattice(lattice: LatticeIndex) -> BoundaryGraph:
    n, d = lattice.n, lattice.d
    shifts = shift_matrix(d)
    if d < 2:
        empty = np.zeros((0, d), dtype=np.int64)
        return BoundaryGraph(n, d, lattice.parts, empty, np.zeros((0, 2), dtype=np.int64))

    candidates = (lattice.parts[:, None, :] + shifts[None, :, :]).reshape(-1, d)
    outside = candidates[lattice.lookup(candidates) < 0]
    boundary = np.unique(outside, axis=0) if outside.size else np.zeros((0, d), dtype=np.int64)
    points = np.vstack([lattice.parts, boundary])

    keys = _point_keys(points, n)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]

    # every f_ij move between two vertices of V-bar, boundary pairs included
    moved = (points[:, None, :] + shifts[None, :, :]).reshape(-1, d)
    in_range = ((moved >= -1) & (moved <= n + 1)).all(axis=1)
    moved_keys = _point_keys(moved, n)
    slots = np.minimum(np.searchsorted(sorted_keys, moved_keys), sorted_keys.size - 1)
    hit = in_range & (sorted_keys[slots] == moved_keys)
    sources = np.repeat(np.arange(points.shape[0], dtype=np.int64), shifts.shape[0])
    targets = order[slots]
    keep = hit & (sources < targets)
    edges = np.stack([sources[keep], targets[keep]], axis=1)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    return BoundaryGraph(n, d, lattice.parts, boundary, edges)


def build_boundary_graph(n: int, d: int, settings: Optional[SolverSettings] = None,
                         max_dim: Optional[int] = None) -> BoundaryGraph:
    """G-bar_{n,d}; the graph itself is defined for any d >= 1"""
    if n < 1:
        raise ValueError(f"Need n >= 1, got n={n}")
    lattice = enumerate_lattice(n, d, settings=settings, max_dim=max_dim)
    graph = _graph_from_lattice(lattice)
    logger.debug(f"Boundary graph n={n}, d={d}: {graph.interior_count} interior, "
                 f"{graph.boundary.shape[0]} boundary, {graph.edges.shape[0]} edges")
    return graph


def laplacian_from_graph(graph: BoundaryGraph, lattice: LatticeIndex) -> DirichletLaplacian:
    interior = graph.interior_count
    degrees = graph.degrees()[:interior]
    a, b = graph.edges[:, 0], graph.edges[:, 1]
    inner = b < interior
    idx = np.arange(interior, dtype=np.int64)
    rows = np.concatenate([idx, a[inner]])
    cols = np.concatenate([idx, b[inner]])
    values = np.concatenate([degrees, -np.ones(int(inner.sum()), dtype=np.int64)])
    order = np.lexsort((cols, rows))
    matrix = SparseSymMatrix(interior, rows[order], cols[order], values[order])
    return DirichletLaplacian(lattice=lattice, matrix=matrix, degrees=degrees)


def dirichlet_laplacian(n: int, d: int, settings: Optional[SolverSettings] = None,
                        max_dim: Optional[int] = None) -> DirichletLaplacian:
    """
    [L_{n,d}]_{mu mu} = deg(mu/n) in G-bar, [L_{n,d}]_{mu nu} = -1 on interior edges

    Boundary vertices carry no rows: u = 0 there.
    """
    lattice = enumerate_lattice(n, d, settings=settings, max_dim=max_dim)
    graph = _graph_from_lattice(lattice)
    return laplacian_from_graph(graph, lattice)


def graph_ground_state(n: int, d: int, tol: Optional[float] = None,
                       settings: Optional[SolverSettings] = None,
                       max_dim: Optional[int] = None) -> EigResult:
    """Smallest eigenpair of L_{n,d}; the vector is indexed like the lattice"""
    laplacian = dirichlet_laplacian(n, d, settings=settings, max_dim=max_dim)
    result = extremal_eig(laplacian.matrix.astype(float), Extremal.SMALLEST, tol=tol, settings=settings)
    logger.debug(f"lambda_min(G-bar) n={n}, d={d}: {result.value:.15g}")
    return result


def lambda_min_graph(n: int, d: int, tol: Optional[float] = None,
                     settings: Optional[SolverSettings] = None,
                     max_dim: Optional[int] = None) -> float:
    """lambda_min(G-bar_{n,d}) = min eig L_{n,d}"""
    return graph_ground_state(n, d, tol=tol, settings=settings, max_dim=max_dim).value


def domination_check(n: int, d: int, tol: float = 1e-10,
                     settings: Optional[SolverSettings] = None,
                     max_dim: Optional[int] = None) -> DominationReport:
    """
    Check d^2 (1 - M_est) - L_{n,d} >= 0 in three steps: off-diagonal
    equality and the diagonal inequality in integer arithmetic (any size),
    then a dense PSD test when the dimension is within the dense cap
    """
    settings = resolve(settings)
    m_est = build_m_est(n, d, settings=settings, max_dim=max_dim)
    laplacian = dirichlet_laplacian(n, d, settings=settings, max_dim=max_dim)
    dim = m_est.dim

    gap = (d * d) * sp.identity(dim, dtype=np.int64, format="csr") \
        - m_est.counts.to_csr() - laplacian.matrix.to_csr()
    gap = gap.tocsr()
    gap.eliminate_zeros()
    slack = gap.diagonal().astype(np.int64)

    off = sp.triu(gap, k=1).tocoo()
    report = DominationReport(
        n=n, d=d, dim=dim,
        offdiagonal_equal=off.nnz == 0,
        diagonal_ok=bool((slack >= 0).all()),
        diagonal_slack=[int(v) for v in slack],
        psd_checked=False,
    )
    if off.nnz:
        mu = m_est.lattice.parts[int(off.row[0])]
        report.violation = [int(v) for v in mu]
        logger.error(f"Off-diagonal mismatch at mu={tuple(report.violation)} (n={n}, d={d})")
        return report
    if not report.diagonal_ok:
        mu = m_est.lattice.parts[int(np.flatnonzero(slack < 0)[0])]
        report.violation = [int(v) for v in mu]
        logger.error(f"Diagonal inequality fails at mu={tuple(report.violation)} (n={n}, d={d})")
        return report

    if dim > settings.dense_cap:
        logger.warning(f"Skipping dense PSD step for n={n}, d={d}: dim {dim} > cap {settings.dense_cap}")
        return report

    psd = psd_check(SparseSymMatrix.from_sparse(gap.astype(float)), tol=tol, settings=settings)
    report.psd_checked = True
    report.is_psd = psd.is_psd
    report.min_eigenvalue = psd.min_eigenvalue
    if not psd.is_psd:
        report.witness = [float(v) for v in psd.witness]
        logger.error(f"d^2(1 - M_est) - L is not PSD for n={n}, d={d}: min eig {psd.min_eigenvalue:.3e}")
    return report
