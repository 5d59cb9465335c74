"""Orbit side of the long-time trace formula.

A windowed test ``psi(t) = phi((t - b) / a)`` is paired with the orbit
distribution ``sum_gamma amplitude(gamma) delta(t - l(gamma))`` against the
oscillation ``e^{i lambda t}``.  Frequencies are either aligned with a single
length or chosen by a simultaneous Dirichlet approximation so that
``cos(lambda l) >= cos(1/2)`` on every length of a window.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from trappedset import bump
from trappedset.errors import (
    ConfigurationError,
    IncompleteSpectrumError,
    InsufficientDataError,
    OutOfHorizonError,
    ResourceCapError,
)
from trappedset.orbits import LengthSpectrum, amplitude
from trappedset.pressure import Method, PressureEstimate
from trappedset.stats import _distinct, log_slope

TWO_PI = 2.0 * math.pi
ALIGN_RADIUS = 0.5
MAX_DIRICHLET_LENGTHS = 24
DIRICHLET_CHUNK = 1 << 18
DIRICHLET_MAX_INTERVALS = 1 << 27
DEFAULT_ALPHA = 2.0
# below this size of lambda * l, float phases are accurate to ~1e-10
FLOAT_PHASE_LIMIT = 2.0 ** 20


class TestKind(str, enum.Enum):
    PHI1 = "phi1"
    PHI2 = "phi2"
    FLAMBDA = "flambda"


@dataclass(frozen=True)
class WindowedTest:
    """``t -> phi((t - b) / a)`` paired against ``e^{i lam t}``.

    Use the ``phi1``, ``phi2`` and ``flambda`` constructors; they enforce the
    parameter relations of each family.  ``lam`` may be an ``mpmath.mpf`` when
    it is too large for float phases.
    """

    kind: TestKind
    a: float
    b: float
    lam: object
    T: float
    epsilon: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.lam > 0 and self.T > 0):
            raise ConfigurationError("a, b, lambda and T must be positive")

    @classmethod
    def phi1(cls, epsilon: float, beta: float, lam, j_plus: float, b: float) -> "WindowedTest":
        """Narrow window: ``T = eps log beta``, ``a = beta^{-eps J+}``, ``b in (T - 1, T)``."""
        if not (epsilon > 0 and beta > 1):
            raise ConfigurationError("need epsilon > 0 and beta > 1")
        T = epsilon * math.log(beta)
        if not T - 1 < b < T:
            raise ConfigurationError(f"centre b={b} must lie in (T - 1, T) = ({T - 1}, {T})")
        with mpmath.workprec(80 + max(0, int(math.log2(beta)))):
            gap = mpmath.mpf(lam) - mpmath.mpf(beta)
        if not 0 <= gap <= 1:
            raise ConfigurationError(f"lambda={lam} must lie in [beta, beta + 1]")
        return cls(TestKind.PHI1, beta ** (-epsilon * j_plus), b, lam, T, epsilon, beta)

    @classmethod
    def phi2(cls, T: float, lam) -> "WindowedTest":
        return cls(TestKind.PHI2, 0.5, T - 0.5, lam, T)

    @classmethod
    def flambda(cls, T: float, lam) -> "WindowedTest":
        """``cos(lam t) phi((t - T + 1/2) / (1/2))``, supported in ``[T - 1, T]``."""
        return cls(TestKind.FLAMBDA, 0.5, T - 0.5, lam, T)

    @property
    def support(self) -> tuple[float, float]:
        return (self.b - self.a, self.b + self.a)

    def weight(self, t):
        return bump.window(t, self.b, self.a)

    def __call__(self, t):
        """Real test function ``cos(lam t) psi(t)`` (float phases)."""
        t = np.asarray(t, float)
        return np.cos(float(self.lam) * t) * self.weight(t)


@dataclass(frozen=True)
class TraceEvaluation:
    value: complex
    truncation_bound: float
    contributing_orbits: int
    oriented: bool
    amplitude_sum: float = 0.0
    details: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def real(self) -> float:
        return self.value.real


def phase(lam, length: float) -> float:
    """``lam * length`` reduced to ``[0, 2 pi)``, exact enough for huge ``lam``."""
    if isinstance(lam, mpmath.mpf) or abs(float(lam) * length) > FLOAT_PHASE_LIMIT:
        mag = abs(float(lam) * length)
        with mpmath.workprec(80 + max(0, int(math.log2(mag + 1.0)))):
            x = mpmath.mpf(lam) * mpmath.mpf(length)
            return float(mpmath.fmod(x, 2 * mpmath.pi))
    return math.fmod(float(lam) * length, TWO_PI)


def geometric_side(spectrum: LengthSpectrum, test: WindowedTest) -> TraceEvaluation:
    """``sum_gamma e^{i lam l} amplitude(gamma) psi(l)`` over orbits in the support.

    Exact finite sum; the real and imaginary parts are summed with ``fsum``.
    """
    lo, hi = test.support
    if lo < 0:
        raise ConfigurationError("test support must lie in [0, horizon]")
    if hi > spectrum.horizon * (1 + 1e-12):
        raise IncompleteSpectrumError(f"test support reaches {hi} beyond horizon {spectrum.horizon}")
    if not spectrum.complete:
        raise IncompleteSpectrumError("spectrum is not certified complete")
    orbits = spectrum.in_window(lo, hi)
    weights = test.weight([o.length for o in orbits]) if orbits else []
    re, im, amps = [], [], []
    n = 0
    for o, w in zip(orbits, weights):
        if w == 0.0:
            continue
        amp = amplitude(o) * float(w)
        th = phase(test.lam, o.length)
        re.append(amp * math.cos(th))
        im.append(amp * math.sin(th))
        amps.append(amp)
        n += 1
    return TraceEvaluation(
        complex(math.fsum(re), math.fsum(im)), 0.0, n, spectrum.oriented, math.fsum(amps)
    )


def align_lambda_phi1(ell0: float, beta: float):
    """Smallest multiple of ``2 pi / ell0`` that is at least ``beta``; must lie in ``[beta, beta + 1]``.

    Returns a float, or an ``mpmath.mpf`` once ``beta * ell0`` is too large
    for the product to be exact in floats.
    """
    if not (ell0 > 0 and beta > 0):
        raise ConfigurationError("ell0 and beta must be positive")
    spacing = TWO_PI / ell0
    if spacing > 1:
        k = math.ceil(beta / spacing)
        if spacing * k > beta + 1:
            raise ConfigurationError(
                f"no multiple of 2*pi/ell0 in [beta, beta + 1]: spacing {spacing:.6g} > 1"
            )
    if beta * ell0 <= FLOAT_PHASE_LIMIT:
        return spacing * math.ceil(beta / spacing)
    with mpmath.workprec(80 + int(math.log2(beta * ell0))):
        sp = 2 * mpmath.pi / mpmath.mpf(ell0)
        return sp * mpmath.ceil(mpmath.mpf(beta) / sp)


def phi1_center(spectrum: LengthSpectrum, T: float, nu: float, c0: float) -> float:
    """Centre for the narrow window at ``T``.

    The first length of the cluster of a minimal-separation witness in
    ``[T - 1/2, T]`` when one exists; otherwise the only length strictly
    inside ``(T - 1, T)`` (the sparse case, e.g. the cylinder); otherwise
    ``T - 1/2``.
    """
    from trappedset.stats import find_separation_witness

    witness = find_separation_witness(spectrum.lengths, T, nu, c0)
    if witness is not None:
        return witness.cluster[1]
    inside, _ = _distinct([o.length for o in spectrum.in_window(T - 1.0, T) if T - 1.0 < o.length < T])
    if len(inside) == 1:
        return inside[0]
    return T - 0.5


# ---------------------------------------------------------------------------
# simultaneous alignment


class DirichletSearchError(RuntimeError):
    """No frequency in the search interval aligns every length."""


def _phase_offsets(lam0: mpmath.mpf, lengths) -> np.ndarray:
    mag = float(lam0) * max(lengths) + 1.0
    with mpmath.workprec(80 + int(math.log2(mag))):
        return np.array([float(mpmath.fmod(lam0 * mpmath.mpf(r), 2 * mpmath.pi)) for r in lengths])


def aligned(lam, lengths, radius: float = ALIGN_RADIUS) -> bool:
    """``|lam r mod 2 pi| <= radius`` (distance to the nearest multiple) for all ``r``."""
    for r in lengths:
        th = phase(mpmath.mpf(lam), r)
        if min(th, TWO_PI - th) > radius:
            return False
    return True


def dirichlet_box(
    lengths: Sequence[float],
    m: float,
    upper_factor: float | None = None,
    radius: float = ALIGN_RADIUS,
    max_intervals: int = DIRICHLET_MAX_INTERVALS,
) -> mpmath.mpf:
    """Lowest ``lam0 >= m`` with ``|lam0 r mod 2 pi| <= radius`` for every length ``r``.

    The feasible set of each length is a union of intervals of width
    ``2 radius / r``.  Intervals of the longest length are walked in order
    and intersected with the others; each intersection is a single interval
    because the pivot intervals are the narrowest.  Phase offsets of each
    chunk are computed in extended precision, so ``m`` may be far beyond the
    range where ``lam * r`` is exact in floats.

    The search covers ``[m, upper_factor * m]``, with ``upper_factor``
    defaulting to ``2 ** len(lengths)``.  The pigeonhole principle on
    ``ceil(2 pi / radius) ** len(lengths)`` boxes guarantees a solution
    once ``upper_factor`` reaches that count.

    Returns
    -------
    mpmath.mpf
        Slightly inside the lowest feasible interval, or ``m`` itself when
        ``m`` is feasible.

    Raises
    ------
    DirichletSearchError
        If the interval holds no aligned frequency.
    ResourceCapError
        If more than ``max_intervals`` pivot intervals would be scanned.
    """
    vals, mult = _distinct(sorted(float(r) for r in lengths))
    if any(k > 1 for k in mult):
        raise ConfigurationError("lengths must be distinct")
    if not vals:
        raise ConfigurationError("need at least one length")
    if len(vals) > MAX_DIRICHLET_LENGTHS:
        raise ConfigurationError(f"{len(vals)} lengths exceed the limit {MAX_DIRICHLET_LENGTHS}")
    if not (m > 0 and all(r > 0 for r in vals)):
        raise ConfigurationError("m and lengths must be positive")
    if upper_factor is None:
        upper_factor = 2.0 ** len(vals)
    r = np.array(vals[::-1])  # pivot (longest) first
    rad = radius * (1 - 1e-9)
    bits = 80 + int(math.log2(float(m) * upper_factor * r[0] + 2.0))
    with mpmath.workprec(bits):
        return _dirichlet_scan(vals, r, mpmath.mpf(m), float(m), upper_factor, rad, radius, max_intervals)


def _dirichlet_scan(vals, r, base, m, upper_factor, rad, radius, max_intervals):
    nu = len(vals)
    span = m * (upper_factor - 1.0)
    chunk = TWO_PI * DIRICHLET_CHUNK / r[0]
    scanned = 0
    offset = 0.0
    while offset <= span:
        lam_s = base + mpmath.mpf(offset)
        th = _phase_offsets(lam_s, r)
        width = min(chunk, span - offset)
        k = np.arange(math.ceil((th[0] - rad) / TWO_PI), math.floor((th[0] + rad + width * r[0]) / TWO_PI) + 1)
        scanned += k.size
        if scanned > max_intervals:
            raise ResourceCapError(f"Dirichlet search exceeded {max_intervals} intervals")
        lo = np.maximum((TWO_PI * k - rad - th[0]) / r[0], 0.0)
        hi = np.minimum((TWO_PI * k + rad - th[0]) / r[0], width)
        for j in range(1, nu):
            kj = np.ceil((th[j] + lo * r[j] - rad) / TWO_PI)
            lo = np.maximum(lo, (TWO_PI * kj - rad - th[j]) / r[j])
            hi = np.minimum(hi, (TWO_PI * kj + rad - th[j]) / r[j])
            keep = hi >= lo
            lo, hi = lo[keep], hi[keep]
        if lo.size:
            i = 0
            x = lo[i] if lo[i] == 0.0 else min(lo[i] + 1e-3 * (hi[i] - lo[i]), hi[i])
            lam0 = lam_s + mpmath.mpf(float(x))
            if not aligned(lam0, vals, radius):
                raise RuntimeError("Dirichlet search returned an unaligned frequency")
            return lam0
        offset += width
        if width <= 0:
            break
    raise DirichletSearchError(
        f"no aligned frequency in [{m}, {upper_factor:.6g} * {m}] for {nu} lengths"
    )


def pigeonhole_factor(n_lengths: int, radius: float = ALIGN_RADIUS) -> float:
    """Search-interval factor that the box principle guarantees to contain a solution."""
    return float(math.ceil(TWO_PI / radius)) ** n_lengths


class InvariantMode(str, enum.Enum):
    GEOMETRIC = "geometric"
    SPECTRAL = "spectral"


def spectral_invariant_estimate(
    spectrum: LengthSpectrum,
    T_grid: Sequence[float],
    mode: InvariantMode | str = InvariantMode.GEOMETRIC,
    resonances=None,
    alpha: float = DEFAULT_ALPHA,
    lambda_min: float = 1.0,
    upper_factor: float | None = None,
    tol: float = 1e-10,
) -> PressureEstimate:
    """Growth rate of ``<Tr u, f_{lam0, T}>`` in ``T``.

    For each ``T`` the distinct lengths in ``[T - 1, T]`` are aligned by
    :func:`dirichlet_box` starting from ``m = max(e^{alpha T}, lambda_min)``;
    the real pairing is computed on the orbit side, or on the resonance side
    when ``mode`` is spectral.  ``resonances`` is a set, or a callable that
    maps the test of each window to a set large enough for it.  The slope of ``log(pairing)`` against ``T``
    is returned; windows with no lengths are skipped.
    """
    mode = InvariantMode(mode)
    if mode is InvariantMode.SPECTRAL and resonances is None:
        raise ConfigurationError("spectral mode needs a resonance set")
    Ts, values, rows = [], [], []
    for T in T_grid:
        if T > spectrum.horizon * (1 + 1e-12):
            raise OutOfHorizonError(f"T={T} exceeds spectrum horizon {spectrum.horizon}")
        # lengths at the ends of the window carry zero weight
        lengths, _ = _distinct([o.length for o in spectrum.in_window(T - 1.0, T) if T - 1.0 < o.length < T])
        if not lengths:
            continue
        m = max(math.exp(alpha * T), lambda_min)
        lam0 = dirichlet_box(lengths, m, upper_factor)
        test = WindowedTest.flambda(T, lam0)
        if mode is InvariantMode.GEOMETRIC:
            ev = geometric_side(spectrum, test)
        else:
            from trappedset.resonances import spectral_side

            res = resonances(test) if callable(resonances) else resonances
            ev = spectral_side(res, test, tol=tol)
        Ts.append(float(T))
        values.append(ev.real)
        rows.append((float(T), lam0, ev.real, ev.value.imag, ev.truncation_bound, ev.contributing_orbits))
    if len(Ts) < 5:
        raise InsufficientDataError(f"{len(Ts)} usable T values, need 5")
    fit = log_slope(Ts, values)
    return PressureEstimate(
        fit.slope,
        0.5,
        Method.TRACE_PAIRING,
        (min(Ts), max(Ts)),
        fit,
        fit.n_points,
        {"rows": rows, "mode": mode.value, "alpha": alpha},
    )
