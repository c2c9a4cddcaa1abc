#!/usr/bin/env python3
"""
Estimation Fidelity Module
Assembles the fidelity matrix M_est(n, d) over the Young lattice, extracts
the optimal fidelity F_est(n, d) = max eig M_est and the deficit
h_{n,d} = n^2 (1 - F_est), and evaluates variational (test-vector) fidelities
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from settings import SolverSettings, resolve
from spectral import Extremal, SparseSymMatrix, extremal_eig
from young_lattice import LatticeIndex, enumerate_lattice

logger = logging.getLogger(__name__)


class ZeroTestVectorError(ValueError):
    """Test function vanishes on every lattice point"""


class AssemblyMethod(str, Enum):
    """How the integer entries of d^2 M_est are produced"""
    CASE = "case"
    INTERSECTION = "intersection"


@dataclass
class EstimationMatrix:
    """
    M_est(n, d) kept exactly: integer counts over a common denominator d^2

    counts[mu, mu] = #(mu + box), counts[mu, nu] = #[(mu + box) & (nu + box)]
    """
    lattice: LatticeIndex
    counts: SparseSymMatrix
    denominator: int

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def d(self) -> int:
        return self.lattice.d

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def matrix(self) -> SparseSymMatrix:
        """Floating-point M_est, converted at solve time"""
        return self.counts.astype(float).scaled(1.0 / self.denominator)

    def entry(self, mu, nu) -> Fraction:
        a = self.lattice.position(mu)
        b = self.lattice.position(nu)
        return Fraction(int(self.counts.entry(a, b)), self.denominator)

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.counts.to_csr().sum(axis=1)).ravel() / self.denominator


class FidelityRecord(BaseModel):
    """Optimal estimation fidelity for one (n, d)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(ge=1)
    d: int = Field(ge=2)
    dim: int = Field(ge=1)
    f_est: float
    h_nd: float
    residual: float
    vector: Optional[np.ndarray] = Field(default=None, exclude=True, repr=False)


def _case_counts(lattice: LatticeIndex) -> SparseSymMatrix:
    diag = lattice.add_box_counts()
    sources, targets = lattice.shift_pairs()
    idx = np.arange(lattice.dim, dtype=np.int64)
    rows = np.concatenate([idx, sources])
    cols = np.concatenate([idx, targets])
    values = np.concatenate([diag, np.ones(sources.size, dtype=np.int64)])
    order = np.lexsort((cols, rows))
    return SparseSymMatrix(lattice.dim, rows[order], cols[order], values[order])


def _intersection_counts(lattice: LatticeIndex, settings: SolverSettings,
                         max_dim: Optional[int]) -> SparseSymMatrix:
    # B[mu, lambda] = 1 iff lambda in mu + box; then d^2 M_est = B B^T
    grown = enumerate_lattice(lattice.n + 1, lattice.d, settings=settings, max_dim=max_dim)
    d = lattice.d
    candidates = (lattice.parts[:, None, :] + np.eye(d, dtype=np.int64)[None, :, :]).reshape(-1, d)
    targets = grown.lookup(candidates)
    sources = np.repeat(np.arange(lattice.dim, dtype=np.int64), d)
    keep = targets >= 0
    incidence = sp.csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.int64), (sources[keep], targets[keep])),
        shape=(lattice.dim, grown.dim),
    )
    return SparseSymMatrix.from_sparse(incidence @ incidence.T)


def build_m_est(n: int, d: int, method: AssemblyMethod = AssemblyMethod.CASE,
                settings: Optional[SolverSettings] = None,
                max_dim: Optional[int] = None) -> EstimationMatrix:
    """
    Assemble M_est(n, d) from either the case formula or the add-box
    intersection counts; both give the same integer matrix

    Raises LatticeCapacityError when the lattice exceeds the cap.
    """
    if n < 1 or d < 2:
        raise ValueError(f"Need n >= 1 and d >= 2, got n={n}, d={d}")
    settings = resolve(settings)
    lattice = enumerate_lattice(n, d, settings=settings, max_dim=max_dim)
    method = AssemblyMethod(method)
    if method == AssemblyMethod.CASE:
        counts = _case_counts(lattice)
    else:
        counts = _intersection_counts(lattice, settings, max_dim)
    logger.debug(f"Assembled M_est n={n}, d={d} ({method.value}): dim={lattice.dim}, nnz={counts.nnz}")
    return EstimationMatrix(lattice=lattice, counts=counts, denominator=d * d)


def fidelity(n: int, d: int, tol: Optional[float] = None,
             settings: Optional[SolverSettings] = None,
             max_dim: Optional[int] = None) -> FidelityRecord:
    """F_est(n, d) as the largest eigenvalue of M_est, with h_{n,d} = n^2 (1 - F_est)"""
    settings = resolve(settings)
    m_est = build_m_est(n, d, settings=settings, max_dim=max_dim)
    result = extremal_eig(m_est.matrix, Extremal.LARGEST, tol=tol, settings=settings)
    f_est = result.value
    record = FidelityRecord(
        n=n, d=d, dim=m_est.dim, f_est=f_est, h_nd=n * n * (1.0 - f_est),
        residual=result.residual, vector=result.vector,
    )
    logger.info(f"F_est(n={n}, d={d}) = {f_est:.15g}, h = {record.h_nd:.12g}")
    return record


def variational_fidelity(n: int, d: int, v: np.ndarray,
                         m_est: Optional[EstimationMatrix] = None,
                         settings: Optional[SolverSettings] = None) -> float:
    """Rayleigh quotient v^T M_est v / v^T v"""
    if m_est is None:
        m_est = build_m_est(n, d, settings=settings)
    elif (m_est.n, m_est.d) != (n, d):
        raise ValueError(f"M_est was built for n={m_est.n}, d={m_est.d}, not n={n}, d={d}")
    v = np.asarray(v, dtype=float).ravel()
    if v.size != m_est.dim:
        raise ValueError(f"Test vector has length {v.size}, lattice has {m_est.dim} diagrams")
    norm_sq = float(v @ v)
    if norm_sq <= 0.0:
        raise ValueError("Test vector must be nonzero")
    return float(v @ m_est.matrix.matvec(v)) / norm_sq


def kahn_test_vector(n: int, d: int, settings: Optional[SolverSettings] = None,
                     max_dim: Optional[int] = None) -> np.ndarray:
    """
    u(mu/n) for u(x) = x_d prod_{i<d} (x_i - x_{i+1}), normalized

    Entries are computed from integer gaps, so they vanish exactly on
    diagrams with a repeated row length or an empty last row.
    """
    if n < d:
        raise ZeroTestVectorError(f"Kahn test vector is identically zero for n={n} < d={d}")
    lattice = enumerate_lattice(n, d, settings=settings, max_dim=max_dim)
    parts = lattice.parts
    gaps = np.concatenate([parts[:, :-1] - parts[:, 1:], parts[:, -1:]], axis=1)
    values = np.prod(gaps.astype(float), axis=1)
    norm = np.linalg.norm(values)
    if norm == 0.0:
        raise ZeroTestVectorError(f"Kahn test vector vanishes on the lattice n={n}, d={d}")
    return values / norm


def graph_test_vector(n: int, d: int, tol: Optional[float] = None,
                      settings: Optional[SolverSettings] = None,
                      max_dim: Optional[int] = None) -> np.ndarray:
    """Ground state of the Dirichlet graph Laplacian L_{n,d}, unit norm"""
    from dirichlet_graph import graph_ground_state

    return graph_ground_state(n, d, tol=tol, settings=settings, max_dim=max_dim).vector
