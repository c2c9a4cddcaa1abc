#!/usr/bin/env python3
"""
Tests for sweeps, the sandwich columns, extrapolation and the bounds table
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from asymptotics import (ExtrapolationError, FitModel, SweepRow, SweepSeries, alpha, beta,
                         bounds_row, bounds_table, exact_h, extrapolate, extrapolate_values,
                         richardson_limit, sweep)
from estimation import fidelity


class TestSweep:
    """Rows and sandwich columns"""

    def test_rows_in_input_order(self):
        series = sweep(2, [6, 1, 4], threads=2)
        assert [row.n for row in series.rows] == [6, 1, 4]
        assert not series.failed_rows()

    def test_matches_fidelity(self):
        series = sweep(3, [5, 9])
        for row in series.rows:
            assert row.h_nd == pytest.approx(fidelity(row.n, 3).h_nd, abs=1e-9)

    def test_sandwich_holds(self):
        for d in (2, 3):
            series = sweep(d, range(1, 25), threads=4)
            assert not series.failed_rows()
            assert series.sandwich_violations() == []
            for row in series.rows:
                assert row.sandwich_lower <= row.h_nd + 1e-9

    def test_equality_at_one_box(self):
        row = sweep(2, [1]).rows[0]
        assert row.sandwich_lower == pytest.approx(0.5)
        assert row.h_nd == pytest.approx(0.5)
        assert row.variational_upper is None

    def test_variational_column(self):
        row = sweep(3, [12]).rows[0]
        assert row.variational_upper is not None
        assert row.variational_upper >= row.h_nd - 1e-9

    def test_graph_bound_between_h_and_kahn(self):
        for d in (2, 3):
            series = sweep(d, range(1, 31), threads=4)
            assert series.loose_graph_rows() == []
            for row in series.rows:
                assert row.graph_upper is not None
                assert row.h_nd <= row.graph_upper + 1e-9
                if row.variational_upper is not None:
                    assert row.graph_upper <= row.variational_upper

    def test_graph_bound_exact_on_small_lattices(self):
        # M_est(3, 2) has the all-ones top eigenvector, which is also the ground state of L
        row = sweep(2, [3]).rows[0]
        assert row.graph_upper == pytest.approx(row.h_nd, abs=1e-9)
        assert row.graph_upper == pytest.approx(2.25, abs=1e-9)
        assert row.variational_upper == pytest.approx(4.5, abs=1e-9)

    def test_loose_graph_row_detected(self):
        row = SweepRow(n=7, d=3, h_nd=1.0, graph_upper=3.0, variational_upper=2.0)
        assert row.sandwich_holds()
        assert not row.graph_bound_tighter()
        assert SweepSeries(d=3, rows=[row]).loose_graph_rows() == [7]

    def test_no_sandwich_above_three_rows(self):
        row = sweep(4, [5]).rows[0]
        assert row.ok
        assert row.lambda_graph is None
        assert row.sandwich_lower is None
        assert row.graph_upper is None

    def test_failed_row_keeps_going(self):
        series = sweep(3, [2, 40], max_dim=20)
        assert series.rows[0].ok
        assert not series.rows[1].ok
        assert "LatticeCapacityError" in series.rows[1].error
        assert [row.n for row in series.failed_rows()] == [40]
        assert series.sandwich_violations() == []

    def test_sandwich_violation_detected(self):
        row = SweepRow(n=5, d=2, h_nd=1.0, sandwich_lower=2.0)
        assert not row.sandwich_holds()
        assert SweepSeries(d=2, rows=[row]).sandwich_violations() == [5]


class TestExtrapolation:
    """Fits of h_{n,d} in 1/n"""

    def test_poly2_recovers_exact_limit(self):
        ns = np.arange(50, 501, 50)
        values = math.pi ** 2 + 3.0 / ns - 40.0 / ns ** 2
        fit = extrapolate_values(ns, values)
        assert fit.limit == pytest.approx(math.pi ** 2, abs=1e-9)
        assert fit.spread < 1e-9
        assert fit.coefficients[1] == pytest.approx(3.0, abs=1e-6)
        assert fit.coefficients[2] == pytest.approx(-40.0, abs=1e-3)
        assert (fit.n_min, fit.n_max, fit.points) == (50, 500, 10)

    def test_three_points_use_linear_spread(self):
        ns = np.array([100.0, 200.0, 400.0])
        values = 7.0 + 2.0 / ns + 50.0 / ns ** 2
        fit = extrapolate_values(ns, values)
        assert fit.limit == pytest.approx(7.0, abs=1e-9)
        assert fit.spread > 0.0

    def test_unsorted_input(self):
        ns = np.array([300.0, 100.0, 200.0, 400.0])
        values = 2.0 + 1.0 / ns
        assert extrapolate_values(ns, values).limit == pytest.approx(2.0, abs=1e-10)

    def test_too_few_points(self):
        with pytest.raises(ExtrapolationError):
            extrapolate_values([100, 200], [1.0, 1.1])

    def test_clustered_points(self):
        ns = np.array([1e6, 1e6 + 1, 1e6 + 2])
        with pytest.raises(ExtrapolationError):
            extrapolate_values(ns, 1.0 + 1.0 / ns)

    def test_richardson(self):
        ns = np.array([50.0, 100.0, 200.0])
        values = 3.0 + 0.5 / ns + 8.0 / ns ** 2
        fit = extrapolate_values(ns, values, model=FitModel.RICHARDSON)
        assert fit.limit == pytest.approx(3.0, abs=1e-12)
        assert richardson_limit(values, 2.0) == pytest.approx(3.0, abs=1e-12)

    def test_richardson_needs_geometric_ladder(self):
        with pytest.raises(ExtrapolationError):
            extrapolate_values([50, 100, 150], [1.0, 1.1, 1.2], model="richardson")
        with pytest.raises(ExtrapolationError):
            richardson_limit([1.0, 2.0], 1.0)

    def test_window(self):
        rows = [SweepRow(n=n, d=2, h_nd=5.0 + 1.0 / n) for n in (10, 20, 60, 80, 100, 120)]
        rows.append(SweepRow(n=90, d=2, error="ConvergenceError: no"))
        fit = extrapolate(SweepSeries(d=2, rows=rows))
        assert (fit.n_min, fit.n_max, fit.points) == (60, 120, 4)
        fit = extrapolate(SweepSeries(d=2, rows=rows), window=(10, 80))
        assert (fit.n_min, fit.n_max, fit.points) == (10, 80, 4)

    @pytest.mark.slow
    def test_two_rows_limit_from_sweep(self):
        series = sweep(2, range(100, 401, 50), threads=4)
        fit = extrapolate(series)
        assert fit.limit == pytest.approx(math.pi ** 2, rel=0.01)


class TestBounds:
    """Published bounds on h(d)"""

    def test_constants(self):
        assert alpha() == pytest.approx(2.81e-6, rel=0.01)
        assert beta() == pytest.approx(1.22, abs=0.01)

    def test_two_row_entry(self):
        row = bounds_row(2)
        assert row.kahn_hi == 10.0
        assert row.exact == pytest.approx(math.pi ** 2)
        assert row.christandl_lo == pytest.approx(3 / 16)

    def test_exact_column(self):
        assert exact_h(3) == pytest.approx(56 * math.pi ** 2 / 9)
        assert exact_h(4) is None
        assert [row.exact is None for row in bounds_table([2, 3, 4, 5])] == [False, False, True, True]

    def test_kahn_below_yang(self):
        for row in bounds_table(range(2, 200)):
            assert row.kahn_hi < row.yang_hi

    def test_kahn_below_christandl_from_eight(self):
        assert bounds_row(7).kahn_hi > bounds_row(7).christandl_hi
        for row in bounds_table(range(8, 200)):
            assert row.kahn_hi <= row.christandl_hi

    def test_large_d_ratios(self):
        row = bounds_row(10_000)
        assert row.kahn_hi / row.haah_lo == pytest.approx(3 / (2 * alpha()), rel=0.01)
        assert row.kahn_hi / row.conjecture_lo == pytest.approx(12 * math.e ** 3 / math.pi, rel=0.01)

    def test_rejects_small_d(self):
        with pytest.raises(ValueError):
            bounds_row(1)
