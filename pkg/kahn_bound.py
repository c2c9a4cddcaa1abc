#!/usr/bin/env python3
"""
Kahn Bound Module
Exact evaluation of the simplex integrals A_d, B_d, C_d, D_d behind Kahn's
test function u(x) = x_d prod_{i<d} (x_i - x_{i+1}), the resulting upper
bound on h(d), and a Monte-Carlo oracle for the integral ratios

Integrals run over S_{d-1} = {y >= 0, sum_i i y_i = 1}. Every value is kept
as a rational multiple of sqrt(5) (the Euclidean surface measure of the
embedded simplex contributes that factor); only ratios to D_d ever enter
h(d), so the measure convention cancels.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np
from pydantic import BaseModel

from settings import SolverSettings, resolve

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10_000


class RecursionCapError(ValueError):
    """Recursive evaluation requested beyond the configured cap"""


@dataclass(frozen=True)
class KahnRatios:
    """A_d / D_d, B_d / D_d, C_d / D_d exactly, plus D_d / sqrt(5)"""
    d: int
    a_ratio: Fraction
    b_ratio: Fraction
    c_ratio: Fraction
    d_over_sqrt5: Fraction

    def rayleigh(self) -> Fraction:
        """(2d (A - B) - (d + 1) C) / (d D)"""
        d = self.d
        return (2 * d * (self.a_ratio - self.b_ratio) - (d + 1) * self.c_ratio) / d

    def d_value_description(self) -> str:
        return f"D_{self.d} = {self.d_over_sqrt5} * sqrt(5)"


def _check_d(d: int) -> None:
    if d < 2:
        raise ValueError(f"Kahn integrals need d >= 2, got d={d}")


def d_closed_form(d: int) -> Fraction:
    """D_d / sqrt(5) = 2^d / ((d!)^3 (3d - 1)!)"""
    _check_d(d)
    return Fraction(2 ** d, math.factorial(d) ** 3 * math.factorial(3 * d - 1))


def ratios_closed_form(d: int) -> KahnRatios:
    _check_d(d)
    return KahnRatios(
        d=d,
        a_ratio=Fraction(d * (d + 1) * (2 * d + 1) * (3 * d - 1) * (3 * d - 2), 12),
        b_ratio=Fraction(d * (d - 1) * (d + 1) * (3 * d - 1) * (3 * d - 2), 12),
        c_ratio=Fraction(d * d * (3 * d - 2) * (3 * d - 1), 2),
        d_over_sqrt5=d_closed_form(d),
    )


# Values at the base of the recursions, divided by sqrt(5)
BASE_A2 = Fraction(5, 24)
BASE_B2 = Fraction(1, 24)
BASE_C2 = Fraction(1, 6)
BASE_D2 = Fraction(1, 240)
BASE_B3 = Fraction(1, 9720)


def ratios_recursive(d: int, settings: Optional[SolverSettings] = None) -> KahnRatios:
    """
    A_d, B_d, C_d, D_d from the recursions obtained by peeling off x_d
    (and x_{d-1} for the cross term of B_d), then divided by D_d
    """
    _check_d(d)
    cap = resolve(settings).recursion_cap
    if d > cap:
        raise RecursionCapError(f"d={d} exceeds the recursion cap of {cap}")

    a, b, c, dd = BASE_A2, BASE_B2, BASE_C2, BASE_D2
    d_prev = None
    for k in range(3, d + 1):
        outer = Fraction(2, k ** 3 * (3 * k - 5) * (3 * k - 4) * (3 * k - 3))
        c_k = dd / (k * (3 * k - 3))
        d_k = Fraction(2, k ** 3 * (3 * k - 3) * (3 * k - 2) * (3 * k - 1)) * dd
        a_k = outer * a + c_k
        if k == 3:
            b_k = BASE_B3
        else:
            cross = Fraction(1, k ** 2 * (k - 1) ** 2 * (3 * k - 6) * (3 * k - 5) * (3 * k - 4) * (3 * k - 3))
            b_k = outer * b + cross * d_prev
        d_prev = dd
        a, b, c, dd = a_k, b_k, c_k, d_k

    return KahnRatios(d=d, a_ratio=a / dd, b_ratio=b / dd, c_ratio=c / dd, d_over_sqrt5=dd)


def h_upper(d: int) -> Fraction:
    """h(d) <= (d + 1)(d - 1)(3d - 2)(3d - 1) / 6"""
    _check_d(d)
    return Fraction((d + 1) * (d - 1) * (3 * d - 2) * (3 * d - 1), 6)


def rayleigh_kahn(d: int, ratios: Optional[KahnRatios] = None) -> Fraction:
    """Rayleigh quotient of Kahn's test function on Omega_{d-1}; equals d * h_upper(d)"""
    ratios = ratios if ratios is not None else ratios_closed_form(d)
    if ratios.d != d:
        raise ValueError(f"Ratios are for d={ratios.d}, not d={d}")
    return ratios.rayleigh()


def _gap_coordinates(x: np.ndarray) -> np.ndarray:
    # y_i = x_i - x_{i+1} (i < d), y_d = x_d
    return np.concatenate([x[..., :-1] - x[..., 1:], x[..., -1:]], axis=-1)


def _products_without_one(y: np.ndarray) -> np.ndarray:
    """y_{i} = prod_{j != i} y_j, from prefix and suffix products"""
    ones = np.ones(y.shape[:-1] + (1,))
    prefix = np.cumprod(np.concatenate([ones, y[..., :-1]], axis=-1), axis=-1)
    suffix = np.cumprod(np.concatenate([ones, y[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return prefix * suffix


def kahn_polynomial(x: np.ndarray) -> np.ndarray:
    """u(x) = x_d prod_{i<d} (x_i - x_{i+1}) along the last axis"""
    return np.prod(_gap_coordinates(np.asarray(x, dtype=float)), axis=-1)


def kahn_gradient(x: np.ndarray) -> np.ndarray:
    """du/dx_1 = y_{1}, du/dx_i = y_{i} - y_{i-1} for i >= 2"""
    others = _products_without_one(_gap_coordinates(np.asarray(x, dtype=float)))
    grad = others.copy()
    grad[..., 1:] -= others[..., :-1]
    return grad


def tangential_gradient_norm(x: np.ndarray) -> np.ndarray:
    """|grad u|^2 - (sum_i du/dx_i)^2 / d: the squared gradient within sum x = 1"""
    grad = kahn_gradient(x)
    d = grad.shape[-1]
    return (grad ** 2).sum(axis=-1) - grad.sum(axis=-1) ** 2 / d


class MonteCarloEstimate(BaseModel):
    """Sampled integral ratios with delta-method 1-sigma errors"""
    d: int
    samples: int
    seed: int
    a_ratio: float
    b_ratio: float
    c_ratio: float
    a_error: float
    b_error: float
    c_error: float
    rayleigh: float
    h_estimate: float

    def deviations(self, exact: KahnRatios) -> List[float]:
        """|estimate - exact| in units of the standard error, for A, B, C"""
        pairs = [(self.a_ratio, self.a_error, exact.a_ratio),
                 (self.b_ratio, self.b_error, exact.b_ratio),
                 (self.c_ratio, self.c_error, exact.c_ratio)]
        return [abs(est - float(ref)) / err if err > 0 else math.inf for est, err, ref in pairs]


@dataclass
class _BatchSums:
    count: int
    first: np.ndarray   # sums of (f_A, f_B, f_C, f_D)
    second: np.ndarray  # sums of f_i * f_j


def _sample_batch(d: int, size: int, seed_seq: np.random.SeedSequence) -> _BatchSums:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    # uniform on the standard simplex, then y_i = s_i / i maps onto S_{d-1};
    # the constant Jacobian cancels in every ratio
    s = rng.dirichlet(np.ones(d), size=size)
    y = s / np.arange(1, d + 1)
    others = _products_without_one(y)
    f = np.empty((size, 4))
    f[:, 0] = (others ** 2).sum(axis=1)
    f[:, 1] = (others[:, 1:] * others[:, :-1]).sum(axis=1)
    f[:, 2] = others[:, -1] ** 2
    f[:, 3] = np.prod(y, axis=1) ** 2
    return _BatchSums(count=size, first=f.sum(axis=0), second=f.T @ f)


def mc_oracle(d: int, samples: int, seed: int,
              settings: Optional[SolverSettings] = None) -> MonteCarloEstimate:
    """
    Estimate A/D, B/D, C/D by uniform sampling of S_{d-1}

    Batches draw from Philox streams spawned from one SeedSequence and are
    reduced in batch order, so the output depends only on (d, samples, seed).
    """
    _check_d(d)
    if samples < MIN_SAMPLES:
        raise ValueError(f"Need at least {MIN_SAMPLES} samples, got {samples}")
    settings = resolve(settings)
    batch = settings.mc_batch_size
    sizes = [batch] * (samples // batch)
    if samples % batch:
        sizes.append(samples % batch)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    with ThreadPoolExecutor(max_workers=settings.worker_count()) as executor:
        results = list(executor.map(lambda args: _sample_batch(d, *args), zip(sizes, children)))

    first = np.zeros(4)
    second = np.zeros((4, 4))
    for result in results:
        first += result.first
        second += result.second
    mean = first / samples
    cov = second / samples - np.outer(mean, mean)

    ratios, errors = [], []
    for k in range(3):
        ratio = mean[k] / mean[3]
        var = cov[k, k] - 2.0 * ratio * cov[k, 3] + ratio ** 2 * cov[3, 3]
        ratios.append(float(ratio))
        errors.append(float(math.sqrt(max(var, 0.0) / samples) / mean[3]))

    rayleigh = (2 * d * (ratios[0] - ratios[1]) - (d + 1) * ratios[2]) / d
    estimate = MonteCarloEstimate(
        d=d, samples=samples, seed=seed,
        a_ratio=ratios[0], b_ratio=ratios[1], c_ratio=ratios[2],
        a_error=errors[0], b_error=errors[1], c_error=errors[2],
        rayleigh=rayleigh, h_estimate=rayleigh / d,
    )
    logger.info(f"MC d={d}, {samples} samples: A/D={ratios[0]:.6g}±{errors[0]:.2g}, "
                f"B/D={ratios[1]:.6g}±{errors[1]:.2g}, C/D={ratios[2]:.6g}±{errors[2]:.2g}")
    return estimate
