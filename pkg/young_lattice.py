#!/usr/bin/env python3
"""
Young Lattice Module
Enumerates Young diagrams with n boxes and at most d rows, indexes them
deterministically, and provides the box-addition and row-move relations
that every matrix in the toolkit is assembled from
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Set, TextIO, Tuple

import numpy as np

from settings import SolverSettings, resolve

logger = logging.getLogger(__name__)

# Parts (mu_1, ..., mu_d), trailing zeros included
YoungDiagram = Tuple[int, ...]


class LatticeCapacityError(ValueError):
    """Raised when a lattice (or a dense matrix over it) exceeds the configured cap"""


@dataclass(frozen=True)
class ShiftVector:
    """Row move f_ij = e_i - e_j (zero-based i, j)"""
    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"Shift needs distinct rows, got i = j = {self.i}")

    def as_array(self, d: int) -> np.ndarray:
        vec = np.zeros(d, dtype=np.int64)
        vec[self.i] += 1
        vec[self.j] -= 1
        return vec

    def apply(self, mu: YoungDiagram) -> Tuple[int, ...]:
        parts = list(mu)
        parts[self.i] += 1
        parts[self.j] -= 1
        return tuple(parts)


def all_shifts(d: int) -> List[ShiftVector]:
    return [ShiftVector(i, j) for i in range(d) for j in range(d) if i != j]


@lru_cache(maxsize=None)
def shift_matrix(d: int) -> np.ndarray:
    """All d(d-1) shift vectors stacked as rows, in all_shifts order"""
    rows = [s.as_array(d) for s in all_shifts(d)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), d)


def is_young_diagram(parts: Tuple[int, ...], n: Optional[int] = None) -> bool:
    if any(p < 0 for p in parts):
        return False
    if any(parts[k] < parts[k + 1] for k in range(len(parts) - 1)):
        return False
    return n is None or sum(parts) == n


def valid_rows(points: np.ndarray, n: int) -> np.ndarray:
    """Mask of rows that are Young diagrams with n boxes"""
    points = np.asarray(points)
    ok = (points >= 0).all(axis=1) & (points.sum(axis=1) == n)
    if points.shape[1] > 1:
        ok &= (points[:, :-1] >= points[:, 1:]).all(axis=1)
    return ok


def count_partitions(n: int, d: int) -> int:
    """Partitions of n into at most d parts, by dynamic programming"""
    if n < 0 or d < 0:
        return 0
    # table[k] = partitions of k into parts of size <= m, for m = 1..d
    # (conjugation: at most d parts <-> largest part at most d)
    table = [1] + [0] * n
    for m in range(1, d + 1):
        for k in range(m, n + 1):
            table[k] += table[k - m]
    return table[n]


def _generate(remaining: int, slots: int, largest: int) -> Iterator[YoungDiagram]:
    if slots == 1:
        if remaining <= largest:
            yield (remaining,)
        return
    lowest = -(-remaining // slots)
    for first in range(min(remaining, largest), lowest - 1, -1):
        for rest in _generate(remaining - first, slots - 1, first):
            yield (first,) + rest


@dataclass
class LatticeIndex:
    """
    Young diagrams with n boxes and at most d rows in reverse-lexicographic
    order, with constant-time position lookup
    """
    n: int
    d: int
    parts: np.ndarray  # (dim, d) int64
    _keys: np.ndarray = field(init=False, repr=False)
    _position: Optional[Dict[YoungDiagram, int]] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.parts = np.asarray(self.parts, dtype=np.int64).reshape(-1, self.d)
        # reverse-lex order makes the encoded keys strictly decreasing
        self._keys = -self._encode(self.parts)

    @property
    def dim(self) -> int:
        return int(self.parts.shape[0])

    def __len__(self) -> int:
        return self.dim

    @property
    def diagrams(self) -> List[YoungDiagram]:
        return [tuple(int(v) for v in row) for row in self.parts]

    def _encode(self, points: np.ndarray) -> np.ndarray:
        base = self.n + 1
        keys = np.zeros(points.shape[0], dtype=np.int64)
        for column in range(self.d):
            keys = keys * base + points[:, column]
        return keys

    def lookup(self, points: np.ndarray) -> np.ndarray:
        """Index of every row of points in the lattice, -1 when absent"""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.d)
        result = np.full(points.shape[0], -1, dtype=np.int64)
        ok = valid_rows(points, self.n)
        if not ok.any():
            return result
        keys = -self._encode(points[ok])
        slots = np.searchsorted(self._keys, keys)
        slots_clipped = np.minimum(slots, self.dim - 1)
        hit = (slots < self.dim) & (self._keys[slots_clipped] == keys)
        found = np.where(hit, slots_clipped, -1)
        result[np.flatnonzero(ok)] = found
        return result

    def position(self, mu: YoungDiagram) -> int:
        if self._position is None:
            self._position = {diagram: k for k, diagram in enumerate(self.diagrams)}
        try:
            return self._position[tuple(int(v) for v in mu)]
        except KeyError:
            raise KeyError(f"{tuple(mu)} is not in the lattice n={self.n}, d={self.d}")

    def __contains__(self, mu: YoungDiagram) -> bool:
        return len(mu) == self.d and int(self.lookup(np.array([mu]))[0]) >= 0

    def add_box_counts(self) -> np.ndarray:
        """#(mu +_d box) for every diagram, as an integer array"""
        counts = np.ones(self.dim, dtype=np.int64)
        if self.d > 1:
            counts += (self.parts[:, :-1] > self.parts[:, 1:]).sum(axis=1)
        return counts

    def shift_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Index pairs (a, b), a < b, of diagrams related by some f_ij"""
        if self.d < 2:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        shifts = shift_matrix(self.d)
        candidates = (self.parts[:, None, :] + shifts[None, :, :]).reshape(-1, self.d)
        targets = self.lookup(candidates)
        sources = np.repeat(np.arange(self.dim, dtype=np.int64), shifts.shape[0])
        keep = (targets >= 0) & (sources < targets)
        return sources[keep], targets[keep]

    def dump(self, stream: TextIO) -> None:
        """One diagram per line, comma-separated parts"""
        for row in self.parts:
            stream.write(",".join(str(int(v)) for v in row) + "\n")


def enumerate_lattice(n: int, d: int, settings: Optional[SolverSettings] = None,
                      max_dim: Optional[int] = None) -> LatticeIndex:
    """
    All partitions of n into at most d parts, reverse-lexicographically ordered

    Raises LatticeCapacityError before generating anything when the partition
    count exceeds the configured cap.
    """
    if n < 0 or d < 1:
        raise ValueError(f"Need n >= 0 and d >= 1, got n={n}, d={d}")
    cap = max_dim if max_dim is not None else resolve(settings).max_dim
    count = count_partitions(n, d)
    if count > cap:
        raise LatticeCapacityError(
            f"Lattice n={n}, d={d} has {count} diagrams, above the cap of {cap}"
        )
    if (n + 1) ** d >= 2 ** 62:
        raise LatticeCapacityError(f"Lattice n={n}, d={d} is too wide to index")

    diagrams = _generate(n, d, n)
    parts = np.fromiter(
        (v for diagram in diagrams for v in diagram),
        dtype=np.int64,
        count=count * d,
    ).reshape(count, d)
    if next(diagrams, None) is not None:
        raise RuntimeError(f"Generator produced more than {count} diagrams for n={n}, d={d}")
    logger.debug(f"Enumerated {count} diagrams for n={n}, d={d}")
    return LatticeIndex(n=n, d=d, parts=parts)


def add_box_set(mu: YoungDiagram, n: int, d: int) -> Set[YoungDiagram]:
    """mu +_d box: every mu + e_i that is still a Young diagram with n + 1 boxes"""
    mu = tuple(int(v) for v in mu)
    if len(mu) != d or not is_young_diagram(mu, n):
        raise ValueError(f"{mu} is not a Young diagram with {n} boxes and {d} rows")
    result = set()
    for i in range(d):
        if i == 0 or mu[i - 1] > mu[i]:
            grown = list(mu)
            grown[i] += 1
            result.add(tuple(grown))
    return result


def shift_neighbors(mu: YoungDiagram, n: int, d: int) -> Set[YoungDiagram]:
    """Every nu in the lattice with nu = mu + f_ij for some i != j"""
    mu = tuple(int(v) for v in mu)
    if len(mu) != d or not is_young_diagram(mu, n):
        raise ValueError(f"{mu} is not a Young diagram with {n} boxes and {d} rows")
    return {nu for nu in (s.apply(mu) for s in all_shifts(d)) if is_young_diagram(nu, n)}
