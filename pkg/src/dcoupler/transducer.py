"""Ensemble-size design for frequency conversion between far-detuned modes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import isclose, nan, pi, sqrt

import numpy as np

from .model import SingularDenominatorError


@dataclass(frozen=True)
class TransducerPoint:
    omega_c: float
    n_opt: float
    g_eff: float
    t_transfer: float
    residual: float
    dispersive_ratio: float  # max_m sqrt(N) g_m / |Delta_m| at the optimum

    @property
    def feasible(self) -> bool:
        return self.n_opt > 0

    @property
    def is_gap(self) -> bool:
        return np.isnan(self.n_opt)


def transducer_optimal_N(omega1: float, omega2: float, omega_c: float, g1: float, g2: float,
                         k: int = 0) -> TransducerPoint:
    """Ensemble size that brings two detuned modes into effective resonance.

    Solves ``(w1 - w2)/N = g2^2 (1/S2 - 1/D2) - g1^2 (1/S1 - 1/D1)`` and
    evaluates the all-ground exchange rate and the ``k``-th complete transfer
    time ``(pi + 2 k pi) / |g1 g2 (1/D1 - 1/S1 + 1/D2 - 1/S2) N|`` there.
    All quantities share one angular-frequency unit.
    """
    if omega1 == omega2:
        raise ValueError("the two modes must have different frequencies")
    d1, d2 = omega1 - omega_c, omega2 - omega_c
    s1, s2 = omega1 + omega_c, omega2 + omega_c
    if 0 in (d1, d2, s1, s2):
        raise SingularDenominatorError("a mode is resonant with the coupler")
    t2 = g2 * g2 * (1 / s2 - 1 / d2)
    t1 = g1 * g1 * (1 / s1 - 1 / d1)
    denom = t2 - t1
    if denom == 0 or isclose(t2, t1, rel_tol=1e-14):
        raise SingularDenominatorError("frequency shifts cancel; no optimal ensemble size")
    n_opt = (omega1 - omega2) / denom
    rate_sum = 1 / d1 - 1 / s1 + 1 / d2 - 1 / s2
    g_eff = 0.5 * g1 * g2 * rate_sum * n_opt
    t_transfer = (pi + 2 * k * pi) / abs(g1 * g2 * rate_sum * n_opt)
    lhs = (omega1 - omega2) / n_opt
    residual = abs(lhs - denom) / abs(lhs)
    root = sqrt(abs(n_opt))
    ratio = max(abs(root * g1 / d1), abs(root * g2 / d2))
    return TransducerPoint(omega_c, n_opt, g_eff, t_transfer, residual, ratio)


@dataclass(frozen=True)
class SweepSpec:
    omega1: float
    omega2: float
    omega_c_lo: float
    omega_c_hi: float
    points: int
    g1: float
    g2: float
    marker: float | None = None
    log_spacing: bool = True
    transfer_k: int = 0

    def __post_init__(self):
        if not self.omega_c_lo < self.omega_c_hi:
            raise ValueError("empty coupler-frequency range")
        if self.points < 2:
            raise ValueError("a sweep needs at least two points")
        if self.log_spacing and self.omega_c_lo <= 0:
            raise ValueError("log spacing needs a positive lower bound")

    def grid(self) -> np.ndarray:
        if self.log_spacing:
            grid = np.geomspace(self.omega_c_lo, self.omega_c_hi, self.points)
        else:
            grid = np.linspace(self.omega_c_lo, self.omega_c_hi, self.points)
        if self.marker is not None and not np.any(grid == self.marker):
            grid = np.sort(np.append(grid, self.marker))
        return grid


def _gap(omega_c: float) -> TransducerPoint:
    return TransducerPoint(omega_c, nan, nan, nan, nan, nan)


def _evaluate(args) -> list[TransducerPoint]:
    spec, chunk = args
    rows = []
    for wc in chunk:
        try:
            rows.append(transducer_optimal_N(spec.omega1, spec.omega2, wc, spec.g1, spec.g2,
                                             spec.transfer_k))
        except SingularDenominatorError:
            rows.append(_gap(wc))
    return rows


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[TransducerPoint]:
    """Evaluate the optimal condition at every coupler frequency, in grid order.

    Singular points come back as gap rows (NaN fields) rather than errors.
    """
    grid = spec.grid()
    if jobs <= 1:
        return _evaluate((spec, grid))
    chunks = np.array_split(grid, jobs)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_evaluate, [(spec, c) for c in chunks])
    return [row for part in parts for row in part]
