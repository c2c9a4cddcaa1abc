#!/usr/bin/env python3
"""
Tests for Young lattice enumeration and the box-addition / row-move relations
"""

import io
import sys
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).parent.parent))

import young_lattice
from settings import SolverSettings
from young_lattice import (LatticeCapacityError, add_box_set, count_partitions,
                           enumerate_lattice, shift_matrix, shift_neighbors)


class TestEnumeration:
    """Ordering, counts and lookup"""

    def test_single_diagram(self):
        lattice = enumerate_lattice(1, 2)
        assert lattice.diagrams == [(1, 0)]
        assert lattice.dim == 1

    def test_two_boxes_two_rows(self):
        assert enumerate_lattice(2, 2).diagrams == [(2, 0), (1, 1)]

    def test_six_boxes_three_rows(self):
        lattice = enumerate_lattice(6, 3)
        assert lattice.dim == 7
        assert lattice.diagrams == [
            (6, 0, 0), (5, 1, 0), (4, 2, 0), (4, 1, 1), (3, 3, 0), (3, 2, 1), (2, 2, 2)
        ]

    def test_count_matches_brute_force(self):
        for n in range(0, 31):
            for d in range(1, 5):
                brute = sorted((tuple(sorted(c, reverse=True))
                                for c in combinations_with_replacement(range(n + 1), d)
                                if sum(c) == n), reverse=True)
                diagrams = enumerate_lattice(n, d).diagrams
                assert count_partitions(n, d) == len(brute), f"n={n}, d={d}"
                assert len(set(diagrams)) == len(diagrams)
                assert diagrams == brute, f"n={n}, d={d}"

    def test_surplus_diagrams_detected(self, monkeypatch):
        generate = young_lattice._generate

        def padded(remaining, slots, largest):
            yield from generate(remaining, slots, largest)
            yield (remaining,) + (0,) * (slots - 1)

        monkeypatch.setattr(young_lattice, "_generate", padded)
        with pytest.raises(RuntimeError):
            enumerate_lattice(5, 3)

    def test_reverse_lex_order(self):
        diagrams = enumerate_lattice(12, 4).diagrams
        assert diagrams == sorted(diagrams, reverse=True)

    def test_position_and_lookup_agree(self):
        lattice = enumerate_lattice(9, 3)
        for k, mu in enumerate(lattice.diagrams):
            assert lattice.position(mu) == k
        found = lattice.lookup(lattice.parts)
        assert np.array_equal(found, np.arange(lattice.dim))

    def test_lookup_rejects_non_diagrams(self):
        lattice = enumerate_lattice(4, 2)
        points = np.array([[2, 2], [1, 3], [5, -1], [3, 0]])
        assert lattice.lookup(points).tolist() == [2, -1, -1, -1]
        assert (2, 2) in lattice
        assert (1, 3) not in lattice

    def test_position_of_missing_diagram(self):
        with pytest.raises(KeyError):
            enumerate_lattice(3, 2).position((1, 2))

    def test_capacity_cap(self):
        with pytest.raises(LatticeCapacityError):
            enumerate_lattice(30, 4, max_dim=10)

    def test_capacity_cap_from_settings(self):
        with pytest.raises(LatticeCapacityError):
            enumerate_lattice(30, 4, settings=SolverSettings(max_dim=10))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            enumerate_lattice(-1, 2)
        with pytest.raises(ValueError):
            enumerate_lattice(3, 0)

    def test_dump(self):
        stream = io.StringIO()
        enumerate_lattice(2, 2).dump(stream)
        assert stream.getvalue() == "2,0\n1,1\n"


class TestRelations:
    """mu + box and f_ij neighbors"""

    def test_add_box_two_rows(self):
        assert add_box_set((1, 0), 1, 2) == {(2, 0), (1, 1)}

    def test_add_box_full_column(self):
        assert add_box_set((1, 1, 1), 3, 3) == {(2, 1, 1)}

    def test_add_box_first_row_always_valid(self):
        for d in range(1, 6):
            assert (6,) + (0,) * (d - 1) in add_box_set((5,) + (0,) * (d - 1), 5, d)

    def test_add_box_counts_match_sets(self):
        lattice = enumerate_lattice(8, 4)
        counts = lattice.add_box_counts()
        for k, mu in enumerate(lattice.diagrams):
            assert counts[k] == len(add_box_set(mu, 8, 4))

    def test_full_add_box_set_iff_strict_drops(self):
        for n in range(1, 16):
            for d in range(1, 5):
                for mu in enumerate_lattice(n, d).diagrams:
                    strict = all(mu[i] > mu[i + 1] for i in range(d - 1))
                    assert (len(add_box_set(mu, n, d)) == d) == strict, mu

    def test_shift_neighbors_symmetric(self):
        for n in range(1, 13):
            for d in (2, 3, 4):
                for mu in enumerate_lattice(n, d).diagrams:
                    for nu in shift_neighbors(mu, n, d):
                        assert mu in shift_neighbors(nu, n, d), (mu, nu)

    def test_shift_neighbors(self):
        assert shift_neighbors((2, 0), 2, 2) == {(1, 1)}
        assert shift_neighbors((2, 1, 0), 3, 3) == {(3, 0, 0), (1, 1, 1)}

    def test_chain_endpoints(self):
        for n in (3, 4):
            assert len(shift_neighbors((n, 0), n, 2)) == 1

    def test_shift_pairs_match_neighbors(self):
        lattice = enumerate_lattice(7, 3)
        sources, targets = lattice.shift_pairs()
        pairs = set(zip(sources.tolist(), targets.tolist()))
        expected = set()
        for a, mu in enumerate(lattice.diagrams):
            for nu in shift_neighbors(mu, 7, 3):
                b = lattice.position(nu)
                expected.add((min(a, b), max(a, b)))
        assert pairs == expected

    def test_shift_matrix_rows(self):
        shifts = shift_matrix(3)
        assert shifts.shape == (6, 3)
        assert (shifts.sum(axis=1) == 0).all()

    def test_rejects_non_diagram(self):
        with pytest.raises(ValueError):
            add_box_set((0, 1), 1, 2)
        with pytest.raises(ValueError):
            shift_neighbors((2, 0), 3, 2)
