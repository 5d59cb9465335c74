"""Topological pressure from periodic-orbit sums and Bowen's equation.

The pressure of ``-s J^u`` is read off as the exponential growth rate of
``sum exp(-s * unstable_exponent)`` over orbits.  Three estimators are
offered; window regression is the default because it stays meaningful when
the pressure is negative, where cumulative sums saturate.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from trappedset.errors import InsufficientDataError
from trappedset.orbits import LengthSpectrum, amplitude
from trappedset.stats import SlopeFit, _check_horizon, log_slope, window_grid

BRACKET_TOL = 1e-6


class Method(str, enum.Enum):
    CUMULATIVE_SUM = "cumulative"
    WINDOW_REGRESSION = "window"
    BOWEN_ASYMPTOTIC = "bowen"
    TRACE_PAIRING = "trace"


class BracketingError(ValueError):
    def __init__(self, lo, hi, f_lo, f_hi):
        super().__init__(f"no sign change of the pressure on [{lo}, {hi}]: Pr={f_lo!r} at {lo}, Pr={f_hi!r} at {hi}")
        self.values = (f_lo, f_hi)


class SaturatedSumError(ValueError):
    pass


def orbit_sum(
    spectrum: LengthSpectrum,
    s: float,
    window: tuple[float, float],
    use_stability: bool = False,
) -> float:
    """``sum exp(-s * unstable_exponent)`` over orbits with length in ``window``.

    With ``use_stability`` the weight uses ``log|det(1 - P)|`` instead.
    """
    lo, hi = window
    if lo < 0:
        raise ValueError("window must lie in [0, horizon]")
    _check_horizon(spectrum, hi)
    orbits = spectrum.in_window(lo, hi)
    if use_stability:
        terms = (math.exp(-s * o.log_stability_det) for o in orbits)
    else:
        terms = (math.exp(-s * o.unstable_exponent) for o in orbits)
    return math.fsum(terms)


@dataclass(frozen=True)
class PressureEstimate:
    value: float
    weight_parameter: float
    method: Method
    T_range: tuple[float, float]
    fit: SlopeFit = field(repr=False)
    nonempty_window_count: int
    diagnostics: dict = field(default_factory=dict)


def window_sums(spectrum, s, grid, width=1.0, use_stability=False):
    return [orbit_sum(spectrum, s, (max(T - width, 0.0), T), use_stability) for T in grid]


def pressure_estimate(
    spectrum: LengthSpectrum,
    s: float,
    method: Method | str = Method.WINDOW_REGRESSION,
    T_range: tuple[float, float] | None = None,
    step: float = 0.5,
    width: float = 1.0,
    use_stability: bool = False,
) -> PressureEstimate:
    """Estimate ``Pr(-s J^u)``.

    * window regression: slope of ``log sum_{l in [T-width, T]}`` against ``T``;
    * cumulative sum: slope of ``log sum_{l <= T}``, refused when the fitted
      value is not positive (the sum saturates and the slope tends to 0);
    * Bowen asymptotic: the window-regression value, plus the ratio of
      ``e^{T Pr} / Pr`` to the cumulative sum at the top of the range.
    """
    method = Method(method)
    if T_range is None:
        T_range = (width, spectrum.horizon)
    grid = window_grid(T_range[0], T_range[1], step)
    _check_horizon(spectrum, grid[-1])
    if method is Method.CUMULATIVE_SUM:
        # a cumulative sum never decreases, so saturation is detected from
        # the window sums: their slope is the pressure whatever its sign
        window_fit = log_slope(grid, window_sums(spectrum, s, grid, width, use_stability))
        if window_fit.slope <= 0:
            raise SaturatedSumError(
                f"nonpositive pressure: use WindowRegression (window slope {window_fit.slope:.4g})"
            )
        sums = [orbit_sum(spectrum, s, (0.0, T), use_stability) for T in grid]
        fit = log_slope(grid, sums)
        return PressureEstimate(fit.slope, s, method, tuple(T_range), fit, fit.n_points)
    sums = window_sums(spectrum, s, grid, width, use_stability)
    if not any(v > 0 for v in sums):
        raise InsufficientDataError("all windows are empty")
    fit = log_slope(grid, sums)
    diagnostics = {}
    if method is Method.BOWEN_ASYMPTOTIC and fit.slope > 0:
        top = grid[-1]
        cumulative = orbit_sum(spectrum, s, (0.0, top), use_stability)
        diagnostics["asymptotic_ratio"] = math.exp(top * fit.slope) / fit.slope / cumulative
        # prime-orbit form with the extra 1/T of the unweighted count
        diagnostics["asymptotic_ratio_over_T"] = diagnostics["asymptotic_ratio"] / top
    return PressureEstimate(fit.slope, s, method, tuple(T_range), fit, fit.n_points, diagnostics)


@dataclass(frozen=True)
class BowenRoot:
    t_u: float
    bracket: tuple[float, float]
    hausdorff_dimension: float
    evaluations: int


def bowen_root(
    spectrum: LengthSpectrum,
    method: Method | str = Method.WINDOW_REGRESSION,
    T_range: tuple[float, float] | None = None,
    s_max: float = 2.0,
    tol: float = BRACKET_TOL,
    **kwargs,
) -> BowenRoot:
    """Root of ``s -> Pr(-s J^u)`` by bisection on ``[0, s_max]``; ``d_H = 2 t_u + 1``."""

    def pr(s):
        return pressure_estimate(spectrum, s, method, T_range, **kwargs).value

    lo, hi = 0.0, s_max
    f_lo, f_hi = pr(lo), pr(hi)
    evals = 2
    if f_lo == 0.0:
        return BowenRoot(0.0, (0.0, 0.0), 1.0, evals)
    if f_lo * f_hi > 0:
        raise BracketingError(lo, hi, f_lo, f_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = pr(mid)
        evals += 1
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    t_u = 0.5 * (lo + hi)
    return BowenRoot(t_u, (lo, hi), 2.0 * t_u + 1.0, evals)


@dataclass(frozen=True)
class SandwichRow:
    T: float
    window_sum: float
    log_window_sum: float
    skipped: bool
    within: bool | None = None


@dataclass(frozen=True)
class SandwichReport:
    pressure: float
    lower_constant: float
    upper_constant: float
    rows: tuple[SandwichRow, ...]
    slope: float

    @property
    def holds(self) -> bool:
        return all(r.within for r in self.rows if r.within is not None)


def amplitude_window_sum(spectrum: LengthSpectrum, T: float, width: float = 1.0) -> float:
    return math.fsum(amplitude(o) for o in spectrum.in_window(max(T - width, 0.0), T))


def pressure_sandwich_check(
    spectrum: LengthSpectrum,
    T_range: tuple[float, float],
    pressure: float | None = None,
    step: float = 0.5,
    slack: float = 2.0,
) -> SandwichReport:
    """Check ``c e^{T Pr} <= sum_{l in [T-1, T]} amplitude <= C T e^{T Pr}``.

    ``c`` and ``C`` are fitted on the first half of the grid, widened by the
    factor ``slack``, and must cover the second half.  ``pressure`` defaults to the window-regression estimate
    of ``Pr(-J^u / 2)`` over the same range.
    """
    if pressure is None:
        pressure = pressure_estimate(spectrum, 0.5, Method.WINDOW_REGRESSION, T_range, step).value
    grid = window_grid(T_range[0], T_range[1], step)
    _check_horizon(spectrum, grid[-1])
    sums = [amplitude_window_sum(spectrum, T) for T in grid]
    half = len(grid) // 2
    first = [(T, v) for T, v in zip(grid[:half], sums[:half]) if v > 0]
    if not first:
        raise InsufficientDataError("no nonempty windows in the first half of the range")
    c = min(v / math.exp(T * pressure) for T, v in first) / slack
    C = max(v / (T * math.exp(T * pressure)) for T, v in first) * slack
    rows = []
    for k, (T, v) in enumerate(zip(grid, sums)):
        if v <= 0:
            rows.append(SandwichRow(float(T), 0.0, -math.inf, True))
            continue
        within = None
        if k >= half:
            scale = math.exp(T * pressure)
            within = c * scale <= v <= C * T * scale
        rows.append(SandwichRow(float(T), v, math.log(v), False, within))
    slope = log_slope(grid, sums, min_points=2).slope
    return SandwichReport(pressure, c, C, tuple(rows), slope)
