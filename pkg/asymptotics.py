#!/usr/bin/env python3
"""
Asymptotics Module
Sweeps h_{n,d} over n together with both sides of the sandwich, extrapolates
the n -> infinity limit, and tabulates the known bounds on h(d)
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from dirichlet_graph import graph_ground_state
from estimation import ZeroTestVectorError, build_m_est, kahn_test_vector, variational_fidelity
from kahn_bound import h_upper
from settings import SolverSettings, resolve
from spectral import Extremal, extremal_eig

logger = logging.getLogger(__name__)

SANDWICH_DIMENSIONS = (2, 3)
SANDWICH_TOL = 1e-9
DEFAULT_WINDOW_MIN = 50


class ExtrapolationError(ValueError):
    """Too few or too clustered points for the requested fit"""


class FitModel(str, Enum):
    POLY2 = "poly2"            # h_inf + c1/n + c2/n^2, least squares
    RICHARDSON = "richardson"  # repeated elimination on a geometric ladder


class SweepRow(BaseModel):
    n: int
    d: int
    dim: Optional[int] = None
    f_est: Optional[float] = None
    h_nd: Optional[float] = None
    lambda_graph: Optional[float] = None
    sandwich_lower: Optional[float] = None
    graph_upper: Optional[float] = None
    variational_upper: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def sandwich_holds(self, tol: float = SANDWICH_TOL) -> bool:
        if not self.ok or self.h_nd is None:
            return False
        if self.sandwich_lower is not None and self.sandwich_lower > self.h_nd + tol:
            return False
        if self.graph_upper is not None and self.h_nd > self.graph_upper + tol:
            return False
        if self.variational_upper is not None and self.h_nd > self.variational_upper + tol:
            return False
        return True

    def graph_bound_tighter(self, tol: float = SANDWICH_TOL) -> bool:
        """Graph ground state beats the Kahn polynomial where both bounds exist"""
        if self.graph_upper is None or self.variational_upper is None:
            return True
        return self.graph_upper <= self.variational_upper + tol


class SweepSeries(BaseModel):
    d: int
    rows: List[SweepRow] = Field(default_factory=list)

    def failed_rows(self) -> List[SweepRow]:
        return [row for row in self.rows if not row.ok]

    def sandwich_violations(self, tol: float = SANDWICH_TOL) -> List[int]:
        return [row.n for row in self.rows if row.ok and not row.sandwich_holds(tol)]

    def loose_graph_rows(self, tol: float = SANDWICH_TOL) -> List[int]:
        return [row.n for row in self.rows if row.ok and not row.graph_bound_tighter(tol)]


class ExtrapolationResult(BaseModel):
    model: FitModel
    limit: float
    spread: float
    points: int
    n_min: int
    n_max: int
    coefficients: List[float] = Field(default_factory=list)


class BoundsRow(BaseModel):
    """Leading terms of the published bounds on h(d); remainders dropped"""
    d: int
    christandl_lo: float
    christandl_hi: float
    yang_hi: float
    haah_lo: float
    kahn_hi: float
    conjecture_lo: float
    exact: Optional[float] = None


def _sweep_row(n: int, d: int, tol: Optional[float], settings: SolverSettings,
               max_dim: Optional[int]) -> SweepRow:
    try:
        m_est = build_m_est(n, d, settings=settings, max_dim=max_dim)
        result = extremal_eig(m_est.matrix, Extremal.LARGEST, tol=tol, settings=settings)
        row = SweepRow(n=n, d=d, dim=m_est.dim, f_est=result.value,
                       h_nd=n * n * (1.0 - result.value))
        if d in SANDWICH_DIMENSIONS:
            ground = graph_ground_state(n, d, tol=tol, settings=settings, max_dim=max_dim)
            row.lambda_graph = ground.value
            row.sandwich_lower = n * n * ground.value / (d * d)
            row.graph_upper = n * n * (1.0 - variational_fidelity(n, d, ground.vector, m_est=m_est))
            try:
                v = kahn_test_vector(n, d, settings=settings, max_dim=max_dim)
                row.variational_upper = n * n * (1.0 - variational_fidelity(n, d, v, m_est=m_est))
            except ZeroTestVectorError:
                logger.debug(f"Kahn vector vanishes for n={n}, d={d}; no variational bound")
        logger.debug(f"Sweep row n={n}, d={d}: h={row.h_nd:.12g}")
        return row
    except Exception as e:
        logger.error(f"Sweep row n={n}, d={d} failed: {e}")
        return SweepRow(n=n, d=d, error=f"{type(e).__name__}: {e}")


def sweep(d: int, n_list: Iterable[int], tol: Optional[float] = None,
          settings: Optional[SolverSettings] = None, threads: Optional[int] = None,
          max_dim: Optional[int] = None) -> SweepSeries:
    """
    One row per n, in input order; a failing row carries its error and the
    sweep continues. Sandwich columns are filled only for d in {2, 3}.
    """
    settings = resolve(settings)
    n_list = [int(n) for n in n_list]
    if d not in SANDWICH_DIMENSIONS:
        logger.warning(f"d={d}: sandwich columns are only computed for d in {SANDWICH_DIMENSIONS}")
    workers = threads or settings.worker_count()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        rows = list(executor.map(lambda n: _sweep_row(n, d, tol, settings, max_dim), n_list))

    series = SweepSeries(d=d, rows=rows)
    for n in series.sandwich_violations():
        logger.error(f"Sandwich violated at n={n}, d={d}")
    return series


def richardson_limit(values: Sequence[float], step_ratio: float) -> float:
    """
    Richardson table for values on a geometric ladder (coarse to fine, each
    step shrinking 1/n by step_ratio), eliminating 1/n, 1/n^2, ... in turn
    """
    if step_ratio <= 1.0:
        raise ExtrapolationError(f"Step ratio must exceed 1, got {step_ratio}")
    level = [float(v) for v in values]
    if not level:
        raise ExtrapolationError("No values to extrapolate")
    for m in range(1, len(level)):
        mult = step_ratio ** m
        level = [(mult * level[i + 1] - level[i]) / (mult - 1.0) for i in range(len(level) - 1)]
    return level[0]


def _select(series: SweepSeries, window: Optional[Tuple[int, int]]) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = window if window is not None else (DEFAULT_WINDOW_MIN, None)
    pairs = [(row.n, row.h_nd) for row in series.rows
             if row.ok and row.h_nd is not None and row.n >= lo and (hi is None or row.n <= hi)]
    pairs.sort()
    ns = np.array([p[0] for p in pairs], dtype=float)
    hs = np.array([p[1] for p in pairs], dtype=float)
    return ns, hs


def _poly2_fit(ns: np.ndarray, hs: np.ndarray) -> np.ndarray:
    # columns 1, x, x^2 with x = n_min / n in (0, 1]
    x = ns.min() / ns
    design = np.vstack([np.ones_like(x), x, x ** 2]).T
    if np.linalg.cond(design) > 1e10:
        raise ExtrapolationError(f"n values {ns.astype(int).tolist()} are too clustered for a 1/n^2 fit")
    coeffs, *_ = np.linalg.lstsq(design, hs, rcond=None)
    return coeffs


def extrapolate(series: SweepSeries, window: Optional[Tuple[int, int]] = None,
                model: FitModel = FitModel.POLY2) -> ExtrapolationResult:
    """h_inf from the rows inside window (inclusive n range, default n >= 50)"""
    ns, hs = _select(series, window)
    return extrapolate_values(ns, hs, model)


def extrapolate_values(ns: Sequence[float], values: Sequence[float],
                       model: FitModel = FitModel.POLY2) -> ExtrapolationResult:
    """
    Limit of values(n) as n -> infinity

    poly2 spread: the largest shift of the limit when one point is dropped
    (or against the 1/n-only fit when there are just three points).
    richardson spread: change when the coarsest point is dropped.
    """
    model = FitModel(model)
    order = np.argsort(np.asarray(ns, dtype=float))
    ns = np.asarray(ns, dtype=float)[order]
    hs = np.asarray(values, dtype=float)[order]
    if ns.size < 3:
        raise ExtrapolationError(f"Need at least 3 points to extrapolate, got {ns.size}")

    if model == FitModel.POLY2:
        coeffs = _poly2_fit(ns, hs)
        limit = float(coeffs[0])
        n_min = ns.min()
        # back to the 1/n, 1/n^2 coefficients
        coefficients = [limit, float(coeffs[1] * n_min), float(coeffs[2] * n_min ** 2)]
        shifts = []
        if ns.size >= 4:
            for k in range(ns.size):
                keep = np.arange(ns.size) != k
                shifts.append(abs(float(_poly2_fit(ns[keep], hs[keep])[0]) - limit))
        else:
            linear = np.vstack([np.ones_like(ns), ns.min() / ns]).T
            shifts.append(abs(float(np.linalg.lstsq(linear, hs, rcond=None)[0][0]) - limit))
        spread = max(shifts)
    else:
        ratios = ns[1:] / ns[:-1]
        if not np.allclose(ratios, ratios[0], rtol=1e-9, atol=0.0):
            raise ExtrapolationError("Richardson extrapolation needs a geometric ladder of n values")
        step = float(ratios[0])
        limit = richardson_limit(hs, step)
        spread = abs(limit - richardson_limit(hs[1:], step))
        coefficients = [limit]

    logger.info(f"Extrapolated ({model.value}) over n in [{int(ns.min())}, {int(ns.max())}]: "
                f"h_inf = {limit:.10g} +- {spread:.2g}")
    return ExtrapolationResult(model=model, limit=limit, spread=spread, points=int(ns.size),
                               n_min=int(ns.min()), n_max=int(ns.max()), coefficients=coefficients)


def alpha() -> float:
    """[(25 - ln 2) / (20000 (pi/100 + ln 2))]^2"""
    return ((25.0 - math.log(2.0)) / (20000.0 * (math.pi / 100.0 + math.log(2.0)))) ** 2


def beta() -> float:
    """sqrt(50 (pi/100 + ln 2) / (25 - ln 2))"""
    return math.sqrt(50.0 * (math.pi / 100.0 + math.log(2.0)) / (25.0 - math.log(2.0)))


def exact_h(d: int) -> Optional[float]:
    """Known values: pi^2 for d=2, 56 pi^2 / 9 for d=3"""
    if d == 2:
        return math.pi ** 2
    if d == 3:
        return 56.0 * math.pi ** 2 / 9.0
    return None


def bounds_row(d: int) -> BoundsRow:
    if d < 2:
        raise ValueError(f"Bounds need d >= 2, got d={d}")
    dd = float(d)
    return BoundsRow(
        d=d,
        christandl_lo=(dd * dd - 1.0) / 16.0,
        christandl_hi=dd ** 5 / (4.0 * math.sqrt(2.0)),
        yang_hi=18.0 * math.pi ** 2 * dd ** 4,
        haah_lo=alpha() * (dd * dd - beta() ** 2) ** 2,
        kahn_hi=float(h_upper(d)),
        conjecture_lo=math.pi * dd ** 4 / (8.0 * math.e ** 3),
        exact=exact_h(d),
    )


def bounds_table(d_list: Iterable[int]) -> List[BoundsRow]:
    return [bounds_row(int(d)) for d in d_list]
