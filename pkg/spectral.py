#!/usr/bin/env python3
"""
Spectral Engine
Extremal eigenpairs of sparse symmetric matrices and symmetric-definite
pencils (thick-restart Lanczos with full reorthogonalization), a dense
oracle, and a positive-semidefiniteness check
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from settings import SolverSettings, resolve
from young_lattice import LatticeCapacityError

logger = logging.getLogger(__name__)


class Extremal(str, Enum):
    """Which end of the spectrum to resolve"""
    LARGEST = "largest"
    SMALLEST = "smallest"


class ConvergenceError(RuntimeError):
    """Eigensolver ran out of iterations"""

    def __init__(self, message: str, best_residual: float, iterations: int):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class DenseCapError(LatticeCapacityError):
    """Dense eigensolve requested above the configured cap"""


class NotPositiveDefiniteError(ValueError):
    """Mass matrix of a pencil is not positive definite"""


@dataclass
class SparseSymMatrix:
    """
    Real symmetric matrix stored as its upper triangle in coordinate form;
    products apply both triangles
    """
    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    _csr: Optional[sp.csr_matrix] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values)
        if self.dim < 0:
            raise ValueError(f"Negative dimension {self.dim}")
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if self.rows.size:
            if self.rows.min() < 0 or self.cols.max() >= self.dim:
                raise IndexError(f"Entry outside a {self.dim}x{self.dim} matrix")
            if (self.rows > self.cols).any():
                raise ValueError("Only upper-triangle entries (row <= col) may be stored")
            keys = self.rows * max(self.dim, 1) + self.cols
            if np.unique(keys).size != keys.size:
                raise ValueError("Duplicate (row, col) entries")

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[Tuple[int, int, float]]) -> "SparseSymMatrix":
        rows, cols, values = [], [], []
        for r, c, v in entries:
            rows.append(min(r, c))
            cols.append(max(r, c))
            values.append(v)
        return cls(dim, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                   np.array(values, dtype=float))

    @classmethod
    def from_dense(cls, array, atol: float = 0.0) -> "SparseSymMatrix":
        array = np.asarray(array)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"Expected a square matrix, got shape {array.shape}")
        if not np.allclose(array, array.T, rtol=0.0, atol=atol):
            raise ValueError("Matrix is not symmetric")
        rows, cols = np.nonzero(np.triu(array))
        return cls(array.shape[0], rows, cols, array[rows, cols])

    @classmethod
    def from_sparse(cls, matrix) -> "SparseSymMatrix":
        """Upper triangle of a (symmetric) scipy sparse matrix"""
        upper = sp.triu(sp.coo_matrix(matrix)).tocsr()
        upper.sum_duplicates()
        upper.eliminate_zeros()
        coo = upper.tocoo()
        return cls(matrix.shape[0], coo.row, coo.col, coo.data)

    @classmethod
    def identity(cls, dim: int) -> "SparseSymMatrix":
        idx = np.arange(dim, dtype=np.int64)
        return cls(dim, idx, idx, np.ones(dim))

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_csr(self) -> sp.csr_matrix:
        if self._csr is None:
            upper = sp.coo_matrix((self.values, (self.rows, self.cols)), shape=(self.dim, self.dim))
            off = self.rows != self.cols
            lower = sp.coo_matrix((self.values[off], (self.cols[off], self.rows[off])),
                                  shape=(self.dim, self.dim))
            self._csr = (upper + lower).tocsr()
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_csr() @ x

    def diagonal(self) -> np.ndarray:
        diag = np.zeros(self.dim, dtype=self.values.dtype if self.values.size else float)
        on = self.rows == self.cols
        diag[self.rows[on]] = self.values[on]
        return diag

    def entry(self, i: int, j: int):
        i, j = min(i, j), max(i, j)
        hit = np.flatnonzero((self.rows == i) & (self.cols == j))
        return self.values[hit[0]] if hit.size else 0

    def astype(self, dtype) -> "SparseSymMatrix":
        return SparseSymMatrix(self.dim, self.rows, self.cols, self.values.astype(dtype))

    def scaled(self, factor: float) -> "SparseSymMatrix":
        return SparseSymMatrix(self.dim, self.rows, self.cols, self.values * factor)

    def combine(self, other: "SparseSymMatrix", alpha: float = 1.0, beta: float = 1.0) -> "SparseSymMatrix":
        """alpha * self + beta * other"""
        if other.dim != self.dim:
            raise ValueError(f"Dimension mismatch: {self.dim} vs {other.dim}")
        return SparseSymMatrix.from_sparse(alpha * self.to_csr() + beta * other.to_csr())


@dataclass
class EigResult:
    """
    Extremal eigenpair; residual is the relative residual
    ||Ax - value x|| / (||x|| max(1, spectral scale)), or its pencil analog
    """
    value: float
    vector: np.ndarray
    residual: float
    iterations: int = 0
    converged: bool = True


@dataclass
class DenseSpectrum:
    values: np.ndarray
    vectors: Optional[np.ndarray] = None


@dataclass
class PsdReport:
    is_psd: bool
    min_eigenvalue: float
    witness: Optional[np.ndarray] = None


def _canonical_sign(vector: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(vector)))
    return -vector if vector[pivot] < 0 else vector


@dataclass
class _LanczosOutcome:
    value: float
    vector: np.ndarray
    estimate: float
    iterations: int
    converged: bool
    scale: float


def _lanczos(apply_op: Callable[[np.ndarray], np.ndarray],
             solve_metric: Optional[Callable[[np.ndarray], np.ndarray]],
             apply_metric: Optional[Callable[[np.ndarray], np.ndarray]],
             dim: int,
             which: Extremal,
             tol: float,
             settings: SolverSettings) -> _LanczosOutcome:
    """
    Thick-restart Lanczos for the operator B = M^{-1} A, self-adjoint in the
    M inner product (M = identity when no metric is given).

    apply_op returns A v, solve_metric applies M^{-1}, apply_metric applies M.
    Convergence is judged on |beta_m s_m| / max(1, max |ritz value|).
    """
    def metric(x):
        return x if apply_metric is None else apply_metric(x)

    def to_operator(z):
        return z if solve_metric is None else solve_metric(z)

    m = min(settings.krylov_dim, dim)
    keep = max(1, min(settings.restart_keep, m // 2))
    rng = np.random.default_rng(12345)

    V = np.zeros((dim, m + 1))
    MV = np.zeros((dim, m + 1)) if apply_metric is not None else V
    T = np.zeros((m, m))

    # seeded generic component so no eigenvector is orthogonal to the start
    start = np.ones(dim) + rng.standard_normal(dim)
    mstart = metric(start)
    norm = np.sqrt(start @ mstart)
    V[:, 0] = start / norm
    if apply_metric is not None:
        MV[:, 0] = mstart / norm

    j = 0
    iterations = 0
    best = np.inf
    beta = 0.0
    exhausted = False

    while True:
        while j < m:
            z = apply_op(V[:, j])
            iterations += 1
            w = to_operator(z)
            h = V[:, :j + 1].T @ z
            w = w - V[:, :j + 1] @ h
            correction = MV[:, :j + 1].T @ w
            w = w - V[:, :j + 1] @ correction
            h = h + correction
            T[:j + 1, j] = h
            T[j, :j + 1] = h

            mw = metric(w)
            beta_sq = float(w @ mw)
            if beta_sq < 0 and apply_metric is not None:
                raise NotPositiveDefiniteError("Mass matrix produced a negative inner product")
            beta = np.sqrt(max(beta_sq, 0.0))
            scale = max(1.0, float(np.abs(np.diag(T)[:j + 1]).max()))

            if beta <= 1e-12 * scale:
                # invariant subspace: continue from a fresh direction, or stop
                beta = 0.0
                if j + 1 >= dim:
                    exhausted = True
                    j += 1
                    break
                fresh = rng.standard_normal(dim)
                for _ in range(2):
                    fresh -= V[:, :j + 1] @ (MV[:, :j + 1].T @ fresh)
                mfresh = metric(fresh)
                fresh_norm = np.sqrt(max(float(fresh @ mfresh), 0.0))
                if fresh_norm <= 1e-12:
                    exhausted = True
                    j += 1
                    break
                V[:, j + 1] = fresh / fresh_norm
                if apply_metric is not None:
                    MV[:, j + 1] = mfresh / fresh_norm
            else:
                V[:, j + 1] = w / beta
                if apply_metric is not None:
                    MV[:, j + 1] = mw / beta
            if j + 1 < m:
                T[j + 1, j] = beta
                T[j, j + 1] = beta
            j += 1

        size = j
        theta, S = la.eigh(T[:size, :size])
        target = size - 1 if which == Extremal.LARGEST else 0
        scale = max(1.0, float(np.abs(theta).max()))
        estimate = 0.0 if exhausted else abs(beta * S[size - 1, target]) / scale
        best = min(best, estimate)
        logger.debug(f"Lanczos basis {size}: ritz={theta[target]:.15g}, residual~{estimate:.3e}")

        # a zero coupling on a partial basis only means a fresh direction was injected
        spanned = exhausted or (size >= dim and beta == 0.0)
        if spanned or (estimate <= tol and not (beta == 0.0 and size < dim)):
            vector = V[:, :size] @ S[:, target]
            return _LanczosOutcome(float(theta[target]), vector, estimate, iterations, True, scale)
        if iterations >= settings.max_iterations:
            vector = V[:, :size] @ S[:, target]
            return _LanczosOutcome(float(theta[target]), vector, best, iterations, False, scale)

        # thick restart around the wanted end of the spectrum
        selected = np.arange(size - keep, size) if which == Extremal.LARGEST else np.arange(keep)
        couplings = beta * S[size - 1, selected]
        next_vector = V[:, size].copy()
        next_metric = MV[:, size].copy() if apply_metric is not None else None
        V[:, :keep] = V[:, :size] @ S[:, selected]
        if apply_metric is not None:
            MV[:, :keep] = MV[:, :size] @ S[:, selected]
        V[:, keep] = next_vector
        if apply_metric is not None:
            MV[:, keep] = next_metric
        T[:] = 0.0
        T[np.arange(keep), np.arange(keep)] = theta[selected]
        T[keep, :keep] = couplings
        T[:keep, keep] = couplings
        j = keep


def extremal_eig(A: SparseSymMatrix, which: Extremal = Extremal.LARGEST,
                 tol: Optional[float] = None,
                 settings: Optional[SolverSettings] = None) -> EigResult:
    """
    Largest or smallest eigenpair of a sparse symmetric matrix

    Deterministic: the Krylov space starts from the all-ones vector plus a
    fixed-seed Gaussian perturbation.
    """
    settings = resolve(settings)
    tol = tol if tol is not None else settings.tol
    if A.dim == 0:
        raise ValueError("Cannot take eigenvalues of a 0x0 matrix")
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    which = Extremal(which)
    csr = A.to_csr().astype(float)

    outcome = _lanczos(lambda x: csr @ x, None, None, A.dim, which, tol, settings)
    value = outcome.value
    vector = _canonical_sign(outcome.vector / np.linalg.norm(outcome.vector))
    residual = float(np.linalg.norm(csr @ vector - value * vector)) / outcome.scale
    if not outcome.converged and residual > tol:
        best = min(outcome.estimate, residual)
        raise ConvergenceError(
            f"Lanczos did not reach tol={tol:.1e} after {outcome.iterations} matvecs "
            f"(best residual {best:.3e})",
            best_residual=best, iterations=outcome.iterations,
        )
    logger.debug(f"extremal_eig({which.value}) dim={A.dim}: {value:.15g} "
                 f"after {outcome.iterations} matvecs")
    return EigResult(value=value, vector=vector, residual=residual, iterations=outcome.iterations)


def _check_dense_cap(dim: int, settings: SolverSettings) -> None:
    if dim > settings.dense_cap:
        raise DenseCapError(f"Dense eigensolve of dimension {dim} exceeds the cap of {settings.dense_cap}")


def dense_sym_eig(A: SparseSymMatrix, vectors: bool = False,
                  settings: Optional[SolverSettings] = None) -> DenseSpectrum:
    """Full spectrum in ascending order (test oracle)"""
    settings = resolve(settings)
    _check_dense_cap(A.dim, settings)
    dense = A.to_dense().astype(float)
    if vectors:
        values, vecs = la.eigh(dense)
        return DenseSpectrum(values=values, vectors=vecs)
    return DenseSpectrum(values=la.eigh(dense, eigvals_only=True))


def pencil_min_eig(K: SparseSymMatrix, M: SparseSymMatrix, tol: Optional[float] = None,
                   settings: Optional[SolverSettings] = None) -> EigResult:
    """
    Smallest lambda with K u = lambda M u, by Lanczos in the M inner product

    M^{-1} K is never formed; M is factorized once (sparse LU) and applied
    through solves.
    """
    settings = resolve(settings)
    tol = tol if tol is not None else settings.tol
    if K.dim != M.dim:
        raise ValueError(f"Pencil dimension mismatch: K is {K.dim}, M is {M.dim}")
    if K.dim == 0:
        raise ValueError("Cannot take eigenvalues of a 0x0 pencil")

    k_csr = K.to_csr().astype(float)
    m_csr = M.to_csr().astype(float)
    if (m_csr.diagonal() <= 0).any():
        raise NotPositiveDefiniteError("Mass matrix has a non-positive diagonal entry")
    if M.dim <= settings.dense_cap:
        try:
            la.cholesky(m_csr.toarray())
        except la.LinAlgError as e:
            raise NotPositiveDefiniteError(f"Mass matrix is not positive definite: {e}")
    factor = splu(m_csr.tocsc())

    outcome = _lanczos(lambda x: k_csr @ x, factor.solve, lambda x: m_csr @ x,
                       K.dim, Extremal.SMALLEST, tol, settings)
    value = outcome.value
    vector = _canonical_sign(outcome.vector / np.linalg.norm(outcome.vector))
    # ||M^{-1} K u - value u||_M / ||u||_M
    r = k_csr @ vector - value * (m_csr @ vector)
    r_norm = np.sqrt(max(float(r @ factor.solve(r)), 0.0))
    u_norm = np.sqrt(float(vector @ (m_csr @ vector)))
    residual = r_norm / u_norm / outcome.scale
    if not outcome.converged and residual > tol:
        best = min(outcome.estimate, residual)
        raise ConvergenceError(
            f"Pencil Lanczos did not reach tol={tol:.1e} after {outcome.iterations} matvecs "
            f"(best residual {best:.3e})",
            best_residual=best, iterations=outcome.iterations,
        )
    logger.debug(f"pencil_min_eig dim={K.dim}: {value:.15g} after {outcome.iterations} matvecs")
    return EigResult(value=value, vector=vector, residual=residual, iterations=outcome.iterations)


def psd_check(A: SparseSymMatrix, tol: float = 1e-10,
              settings: Optional[SolverSettings] = None) -> PsdReport:
    """True iff the smallest eigenvalue is >= -tol; otherwise returns its eigenvector"""
    spectrum = dense_sym_eig(A, vectors=True, settings=settings)
    lowest = float(spectrum.values[0])
    if lowest >= -tol:
        return PsdReport(is_psd=True, min_eigenvalue=lowest)
    witness = _canonical_sign(spectrum.vectors[:, 0])
    return PsdReport(is_psd=False, min_eigenvalue=lowest, witness=witness)
