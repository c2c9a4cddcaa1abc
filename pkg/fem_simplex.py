#!/usr/bin/env python3
"""
FEM Simplex Module
Triangulates the scaled Young lattice region by the d-cliques of the boundary
graph, assembles P1 stiffness and mass matrices (generic element formulas and
the lattice closed forms), and bounds the continuum Dirichlet eigenvalue
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, TextIO, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel

from dirichlet_graph import BoundaryGraph, build_boundary_graph, dirichlet_laplacian
from settings import SolverSettings, resolve
from spectral import Extremal, SparseSymMatrix, extremal_eig, pencil_min_eig

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (2, 3)

# lambda_FEM = (n^2 / d) * lam / (1 - lam / c_d), lam = lambda_min(G-bar_{n,d})
_MASS_DENOMINATOR = {2: 6, 3: 12}


class UnsupportedDimensionError(ValueError):
    """Only d = 2 and d = 3 lattices fill their region with congruent simplices"""


class DegenerateSimplexError(ValueError):
    """Simplex with (numerically) zero volume"""


def _require_supported(d: int) -> None:
    if d not in SUPPORTED_DIMENSIONS:
        raise UnsupportedDimensionError(
            f"d={d} is not supported: regular simplices with lattice edges fill space "
            f"only for d = 2, 3"
        )


def hyperplane_basis(d: int) -> np.ndarray:
    """
    Orthonormal basis (rows) of {x : sum x = 0}, from Gram-Schmidt on
    f_12, f_23, ..., f_{d-1,d}
    """
    basis = []
    for k in range(d - 1):
        vec = np.zeros(d)
        vec[k], vec[k + 1] = 1.0, -1.0
        for b in basis:
            vec -= (vec @ b) * b
        basis.append(vec / np.linalg.norm(vec))
    return np.array(basis).reshape(d - 1, d)


@dataclass
class Triangulation:
    """
    Xi_{n,d} over embedded vertices; interior vertices come first, in lattice order
    """
    n: int
    d: int
    vertices: np.ndarray        # (V, d - 1) embedded coordinates
    lattice_points: np.ndarray  # (V, d) integer vectors mu
    interior_flags: np.ndarray  # (V,) bool
    simplices: np.ndarray       # (S, d) vertex indices

    @property
    def interior_count(self) -> int:
        return int(self.interior_flags.sum())

    @property
    def simplex_count(self) -> int:
        return int(self.simplices.shape[0])

    def simplex_volumes(self) -> np.ndarray:
        corners = self.vertices[self.simplices]
        edges = corners[:, 1:, :] - corners[:, :1, :]
        k = self.d - 1
        return np.abs(np.linalg.det(edges)) / math.factorial(k)

    def measure(self) -> float:
        """Total length (d=2) or area (d=3) of the triangulated region"""
        return float(self.simplex_volumes().sum())

    def edge_lengths(self) -> np.ndarray:
        corners = self.vertices[self.simplices]
        lengths = []
        for a in range(self.d):
            for b in range(a + 1, self.d):
                lengths.append(np.linalg.norm(corners[:, a] - corners[:, b], axis=1))
        return np.concatenate(lengths) if lengths else np.zeros(0)

    def export_mesh(self, stream: TextIO) -> None:
        """Header "d n V S", then one vertex per line, then one simplex per line"""
        stream.write(f"{self.d} {self.n} {self.vertices.shape[0]} {self.simplex_count}\n")
        for point in self.vertices:
            stream.write(" ".join(f"{x:.17g}" for x in point) + "\n")
        for simplex in self.simplices:
            stream.write(" ".join(str(int(v)) for v in simplex) + "\n")


@dataclass
class FemPair:
    """Stiffness K and mass M restricted to interior vertices"""
    K: SparseSymMatrix
    M: SparseSymMatrix

    @property
    def dim(self) -> int:
        return self.K.dim


class FemRecord(BaseModel):
    n: int
    d: int
    dim: int
    pencil_value: float
    formula_value: float
    lambda_graph: float
    continuum: float
    relative_error: float
    residual: float

    @property
    def value(self) -> float:
        return self.pencil_value


def _cliques(graph: BoundaryGraph, size: int) -> np.ndarray:
    nx_graph = graph.to_networkx()
    found = []
    # enumerate_all_cliques yields cliques in nondecreasing size
    for clique in nx.enumerate_all_cliques(nx_graph):
        if len(clique) > size:
            break
        if len(clique) == size:
            found.append(sorted(clique))
    if not found:
        return np.zeros((0, size), dtype=np.int64)
    simplices = np.array(found, dtype=np.int64)
    return simplices[np.lexsort(simplices.T[::-1])]


def build_triangulation(n: int, d: int, settings: Optional[SolverSettings] = None,
                        max_dim: Optional[int] = None) -> Triangulation:
    """
    Xi_{n,d}: every d-clique of G-bar_{n,d} as a (d-1)-simplex

    d=2 gives a chain of segments, d=3 equilateral triangles of side sqrt(2)/n.
    """
    _require_supported(d)
    if n < 2:
        raise ValueError(f"Need n >= 2 for a triangulation, got n={n}")
    graph = build_boundary_graph(n, d, settings=settings, max_dim=max_dim)
    points = graph.points
    vertices = (points / n) @ hyperplane_basis(d).T
    flags = np.arange(graph.vertex_count) < graph.interior_count
    simplices = _cliques(graph, d)
    logger.debug(f"Triangulation n={n}, d={d}: {vertices.shape[0]} vertices, {simplices.shape[0]} simplices")
    return Triangulation(n=n, d=d, vertices=vertices, lattice_points=points,
                         interior_flags=flags, simplices=simplices)


def element_matrices(corners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact P1 stiffness and mass of one k-simplex given its k+1 corners in R^k

    K_ab = vol * grad(phi_a) . grad(phi_b), M_ab = vol (1 + delta_ab) / ((k+1)(k+2))
    """
    corners = np.asarray(corners, dtype=float)
    k = corners.shape[1]
    if corners.shape[0] != k + 1:
        raise ValueError(f"A {k}-simplex needs {k + 1} corners, got {corners.shape[0]}")
    edges = (corners[1:] - corners[0]).T
    det = float(np.linalg.det(edges))
    scale = max(float(np.abs(edges).max()), 1e-300) ** k
    if abs(det) <= 1e-12 * scale:
        raise DegenerateSimplexError(f"Simplex with corners {corners.tolist()} has zero volume")
    vol = abs(det) / math.factorial(k)
    inverse = np.linalg.inv(edges)
    grads = np.vstack([-inverse.sum(axis=0), inverse])
    stiffness = vol * grads @ grads.T
    mass = vol / ((k + 1) * (k + 2)) * (np.ones((k + 1, k + 1)) + np.eye(k + 1))
    return stiffness, mass


def assemble_generic(T: Triangulation) -> FemPair:
    """Sum element matrices over Xi and keep interior rows and columns"""
    size = T.vertices.shape[0]
    rows, cols, k_vals, m_vals = [], [], [], []
    for simplex in T.simplices:
        stiffness, mass = element_matrices(T.vertices[simplex])
        r, c = np.meshgrid(simplex, simplex, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        k_vals.append(stiffness.ravel())
        m_vals.append(mass.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    # duplicates are summed on conversion
    K = sp.coo_matrix((np.concatenate(k_vals), (rows, cols)), shape=(size, size)).tocsr()
    M = sp.coo_matrix((np.concatenate(m_vals), (rows, cols)), shape=(size, size)).tocsr()
    interior = T.interior_count
    return FemPair(K=SparseSymMatrix.from_sparse(K[:interior, :interior]),
                   M=SparseSymMatrix.from_sparse(M[:interior, :interior]))


def closed_form_pair(n: int, d: int, settings: Optional[SolverSettings] = None,
                     max_dim: Optional[int] = None) -> FemPair:
    """
    d=2: K = (n / sqrt 2) L, M = (sqrt 2 / n)(1 - L/6)
    d=3: K = L / sqrt 3,     M = (sqrt 3 / n^2)(1 - L/12)
    """
    _require_supported(d)
    L = dirichlet_laplacian(n, d, settings=settings, max_dim=max_dim).matrix.astype(float)
    identity = SparseSymMatrix.identity(L.dim)
    c = _MASS_DENOMINATOR[d]
    if d == 2:
        K = L.scaled(n / math.sqrt(2.0))
        M = identity.combine(L, alpha=math.sqrt(2.0) / n, beta=-math.sqrt(2.0) / (c * n))
    else:
        K = L.scaled(1.0 / math.sqrt(3.0))
        M = identity.combine(L, alpha=math.sqrt(3.0) / n ** 2, beta=-math.sqrt(3.0) / (c * n ** 2))
    return FemPair(K=K, M=M)


def fem_formula(n: int, d: int, lam: float) -> float:
    """Pencil minimum expressed through lambda_min(G-bar_{n,d})"""
    _require_supported(d)
    return (n * n / d) * lam / (1.0 - lam / _MASS_DENOMINATOR[d])


def interval_reference(length: float) -> float:
    """Dirichlet ground state of a segment: pi^2 / length^2"""
    if length <= 0:
        raise ValueError(f"Segment length must be positive, got {length}")
    return math.pi ** 2 / length ** 2


def hemi_equilateral_eigenvalue(inradius: float) -> float:
    """Dirichlet ground state of the 30-60-90 triangle: 28 pi^2 / (27 r^2)"""
    if inradius <= 0:
        raise ValueError(f"Inradius must be positive, got {inradius}")
    return 28.0 * math.pi ** 2 / (27.0 * inradius ** 2)


def continuous_reference(d: int) -> float:
    """lambda_min of the Dirichlet Laplacian on the ordered simplex Omega_{d-1}"""
    _require_supported(d)
    if d == 2:
        return 2.0 * math.pi ** 2
    return hemi_equilateral_eigenvalue(1.0 / (3.0 * math.sqrt(2.0)))


def fem_min_eig(n: int, d: int, tol: Optional[float] = None,
                settings: Optional[SolverSettings] = None,
                max_dim: Optional[int] = None) -> FemRecord:
    """
    min eig M^{-1} K on the generic assembly, alongside the value predicted
    from lambda_min(G-bar_{n,d}) through the closed forms
    """
    _require_supported(d)
    settings = resolve(settings)
    T = build_triangulation(n, d, settings=settings, max_dim=max_dim)
    pair = assemble_generic(T)
    pencil = pencil_min_eig(pair.K, pair.M, tol=tol, settings=settings)

    L = dirichlet_laplacian(n, d, settings=settings, max_dim=max_dim).matrix.astype(float)
    lam = extremal_eig(L, Extremal.SMALLEST, tol=tol, settings=settings).value
    formula = fem_formula(n, d, lam)
    continuum = continuous_reference(d)
    if abs(pencil.value - formula) > 1e-6 * max(1.0, abs(formula)):
        logger.warning(f"FEM paths disagree for n={n}, d={d}: pencil {pencil.value:.15g}, "
                       f"formula {formula:.15g}")
    record = FemRecord(
        n=n, d=d, dim=pair.dim, pencil_value=pencil.value, formula_value=formula,
        lambda_graph=lam, continuum=continuum,
        relative_error=abs(pencil.value - continuum) / continuum,
        residual=pencil.residual,
    )
    logger.info(f"FEM n={n}, d={d}: {pencil.value:.12g} (continuum {continuum:.12g})")
    return record
