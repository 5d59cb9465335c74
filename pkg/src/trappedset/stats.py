"""Length-spectrum statistics: window counts, entropy, minimal separation and
the dynamical constants that fix the exponents of the counting estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats as sps

from trappedset.errors import InsufficientDataError, OutOfHorizonError
from trappedset.orbits import LengthSpectrum

WINDOW_WIDTH = 0.5
J_PLUS_MARGIN = 0.1
MIN_WINDOWS = 5


def _check_horizon(spectrum: LengthSpectrum, T: float) -> None:
    if T > spectrum.horizon * (1 + 1e-12):
        raise OutOfHorizonError(f"T={T} exceeds spectrum horizon {spectrum.horizon}")


def window_count(spectrum: LengthSpectrum, T: float, width: float = WINDOW_WIDTH) -> int:
    """Number of orbits with length in the closed window ``[T - width, T]``."""
    _check_horizon(spectrum, T)
    return len(spectrum.in_window(T - width, T))


def window_grid(t_min: float, t_max: float, step: float) -> np.ndarray:
    n = int(math.floor((t_max - t_min) / step + 1e-9))
    return t_min + step * np.arange(n + 1)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int
    T: tuple[float, ...] = field(repr=False)
    log_values: tuple[float, ...] = field(repr=False)

    @property
    def band(self) -> tuple[float, float]:
        return (self.slope - 2 * self.stderr, self.slope + 2 * self.stderr)


def log_slope(T: Sequence[float], values: Sequence[float], min_points: int = MIN_WINDOWS) -> SlopeFit:
    """Least-squares slope of ``log(values)`` against ``T`` over positive entries."""
    T = np.asarray(T, float)
    values = np.asarray(values, float)
    keep = values > 0
    if keep.sum() < min_points:
        raise InsufficientDataError(f"{int(keep.sum())} nonempty windows, need {min_points}")
    x, y = T[keep], np.log(values[keep])
    fit = sps.linregress(x, y)
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return SlopeFit(float(fit.slope), stderr, float(fit.intercept), int(keep.sum()), tuple(x), tuple(y))


def entropy_estimate(
    spectrum: LengthSpectrum,
    T_range: tuple[float, float],
    width: float = WINDOW_WIDTH,
    step: float | None = None,
) -> SlopeFit:
    """Topological entropy as the log-slope of window counts.

    Windows ``[T - width, T]`` are placed on a grid from ``T_range[0]`` to
    ``T_range[1]`` with spacing ``step`` (default ``width``); empty windows
    are dropped from the regression.  The confidence band is two standard
    errors.
    """
    grid = window_grid(T_range[0], T_range[1], step or width)
    _check_horizon(spectrum, grid[-1])
    counts = [window_count(spectrum, T, width) for T in grid]
    return log_slope(grid, counts)


@dataclass(frozen=True)
class SeparationWitness:
    window: tuple[float, float]
    cluster: tuple[float, ...]
    multiplicities: tuple[int, ...]
    left_gap: float
    right_gap: float
    cluster_span: float
    nu_used: float
    c0_used: float


def _distinct(lengths: Sequence[float], rel_tol: float = 1e-12):
    vals, mult = [], []
    for x in lengths:
        if vals and abs(x - vals[-1]) <= rel_tol * max(1.0, abs(x)):
            mult[-1] += 1
        else:
            vals.append(x)
            mult.append(1)
    return vals, mult


def find_separation_witness(lengths: Sequence[float], T: float, nu: float, c0: float, width: float = WINDOW_WIDTH):
    """First run of consecutive distinct periods in ``[T - width, T]`` meeting the gap conditions.

    Runs are scanned by left end, then by right end.  Equal lengths are
    merged into one element with a multiplicity.
    """
    inside = sorted(x for x in lengths if T - width <= x <= T)
    vals, mult = _distinct(inside)
    gap = math.exp(-nu * T)
    span_max = math.exp(-c0 * T)
    n = len(vals)
    for i in range(n - 2):
        if vals[i + 1] - vals[i] < gap:
            continue
        for j in range(i + 2, n):
            span = vals[j - 1] - vals[i + 1]
            if span > span_max:
                break
            if vals[j] - vals[j - 1] >= gap:
                return SeparationWitness(
                    window=(T - width, T),
                    cluster=tuple(vals[i:j + 1]),
                    multiplicities=tuple(mult[i:j + 1]),
                    left_gap=vals[i + 1] - vals[i],
                    right_gap=vals[j] - vals[j - 1],
                    cluster_span=span,
                    nu_used=nu,
                    c0_used=c0,
                )
    return None


def check_minimal_separation(
    spectrum: LengthSpectrum,
    nu: float,
    c0: float,
    T_grid: Sequence[float],
    width: float = WINDOW_WIDTH,
) -> dict:
    """Map each ``T`` to a :class:`SeparationWitness` or ``None``."""
    if not (nu > 0 and c0 > 0):
        raise ValueError("nu and c0 must be positive")
    out = {}
    for T in T_grid:
        _check_horizon(spectrum, T)
        out[float(T)] = find_separation_witness(spectrum.lengths, T, nu, c0, width)
    return out


def theta_plus_u(spectrum: LengthSpectrum, T_range: tuple[float, float]) -> float:
    """Largest ``log|1 - Lambda| / (2 l)`` over orbits with length in ``T_range``."""
    _check_horizon(spectrum, T_range[1])
    orbits = spectrum.in_window(*T_range)
    if not orbits:
        raise InsufficientDataError(f"no orbits with length in {T_range}")
    return max(o.log_unstable_factor / (2.0 * o.length) for o in orbits)


@dataclass(frozen=True)
class DynamicalConstants:
    theta_plus_u: float
    h_top: float
    nu: float
    j_plus: float


def choose_j_plus(theta_plus_u: float, h_top: float, nu: float, margin: float = J_PLUS_MARGIN) -> DynamicalConstants:
    vals = (theta_plus_u, h_top, nu)
    if not all(math.isfinite(v) and v >= 0 for v in vals):
        raise ValueError(f"constants must be finite and nonnegative: {vals}")
    return DynamicalConstants(theta_plus_u, h_top, nu, max(vals) + margin)
