"""Resonance sets, the resonance side of the Poisson pairing, and strip counting.

The pairing of a resonance set with a windowed cosine test
``2 cos(lam t) psi(t)``, ``psi(t) = phi((t - b) / a)``, is

    sum_j m_j sum_{iota = +-1} a phi_hat(a (lam_j + iota lam)) e^{-i b (lam_j + iota lam)}.

For the hyperbolic cylinder the resonances form the lattice
``2 pi n / l0 - i (k + 1/2)`` and the Poisson summation identity

    sum_n e^{-2 pi i n t / l0} sum_k e^{-(k + 1/2) t} = l0 sum_m delta(t - m l0) / (2 sinh(m l0 / 2))

makes the pairing equal to the real orbit-side pairing when every lattice
point has multiplicity one and both orientations of each closed geodesic are
counted.  :func:`calibrate_cylinder` checks all candidate conventions.
"""
from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from trappedset import bump
from trappedset.errors import ConfigurationError, InsufficientDataError, TruncationError
from trappedset.trace import TraceEvaluation, WindowedTest, geometric_side

IM_TOL = 1e-12
DEFAULT_TOL = 1e-9


class MultiplicityRule(str, enum.Enum):
    UNIT = "unit"
    TWO = "two"
    ODD = "odd"  # 2k + 1 on row k

    def __call__(self, k: int) -> int:
        if self is MultiplicityRule.UNIT:
            return 1
        if self is MultiplicityRule.TWO:
            return 2
        return 2 * k + 1


# winning convention of calibrate_cylinder
CALIBRATED_RULE = MultiplicityRule.UNIT
CALIBRATED_ORIENTED = True


@dataclass(frozen=True, order=True)
class Resonance:
    lam: complex
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        if self.lam.imag > IM_TOL:
            raise ConfigurationError(f"resonance {self.lam} lies in the upper half plane")
        if not (isinstance(self.multiplicity, (int, np.integer)) and self.multiplicity >= 1):
            raise ConfigurationError("multiplicity must be a positive integer")
        if not (math.isfinite(self.lam.real) and math.isfinite(self.lam.imag)):
            raise ConfigurationError("resonance must be finite")


@dataclass(frozen=True)
class CylinderLattice:
    ell0: float
    k_max: int
    n_max: int
    rule: MultiplicityRule


@dataclass(frozen=True)
class Synthetic:
    seed: int
    descriptor: object


@dataclass(frozen=True)
class FileSource:
    path: str


def _sort_key(r: Resonance):
    return (-r.lam.imag, r.lam.real)


@dataclass(frozen=True)
class ResonanceSet:
    """Resonances sorted by ``(Im desc, Re asc)``, with where they came from."""

    entries: tuple[Resonance, ...]
    provenance: object = None
    truncation: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=_sort_key)))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.lam for r in self.entries], dtype=complex)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([r.multiplicity for r in self.entries], dtype=float)

    def union(self, other: "ResonanceSet") -> "ResonanceSet":
        return ResonanceSet(self.entries + other.entries, None, None)

    def select(self, keep: Callable[[Resonance], bool]) -> "ResonanceSet":
        return ResonanceSet(tuple(r for r in self.entries if keep(r)), self.provenance, self.truncation)


def cylinder_lattice(
    ell0: float,
    k_max: int,
    n_max: int,
    rule: MultiplicityRule | str = CALIBRATED_RULE,
) -> ResonanceSet:
    """``2 pi n / l0 - i (k + 1/2)`` for ``|n| <= n_max``, ``0 <= k <= k_max``.

    These are the zeros of ``prod_k (1 - e^{-(s + k) l0})`` under
    ``s = 1/2 - i lam``, which puts them in ``Im lam < 0``; the set is
    symmetric under ``lam -> -conj(lam)``, so the sign of ``Re lam`` is moot.
    """
    if not ell0 > 0:
        raise ConfigurationError("ell0 must be positive")
    if k_max < 0 or n_max < 0:
        raise ConfigurationError("k_max and n_max must be nonnegative")
    rule = MultiplicityRule(rule)
    step = 2.0 * math.pi / ell0
    entries = tuple(
        Resonance(complex(step * n, -(k + 0.5)), rule(k))
        for k in range(k_max + 1)
        for n in range(-n_max, n_max + 1)
    )
    return ResonanceSet(entries, CylinderLattice(ell0, k_max, n_max, rule), (k_max, n_max))


# ---------------------------------------------------------------------------
# pairing


def _lam_float(test: WindowedTest) -> float:
    lam = float(test.lam)
    if lam * test.b > 1e12:
        raise ConfigurationError(f"lambda={lam} is too large for the resonance-side pairing")
    return lam


def pairing_terms(values: np.ndarray, a: float, b: float, lam: float) -> np.ndarray:
    """``sum_iota a phi_hat(a (z + iota lam)) e^{-i b (z + iota lam)}`` per resonance ``z``."""
    out = np.zeros(values.size, dtype=complex)
    if not values.size:
        return out
    ys, inverse = np.unique(values.imag, return_inverse=True)
    for iota in (1.0, -1.0):
        w = values + iota * lam
        if ys.size <= 64:
            # shared trigonometric factors across rows
            xs, xinv = np.unique(w.real, return_inverse=True)
            grid = bump.phi_hat_rows(a * xs, a * ys)
            ph = grid[xinv, inverse]
        else:
            ph = bump.phi_hat(a * w)
        out += a * ph * np.exp(-1j * b * w)
    return out


def _envelope_sum_tail(x0: float, spacing: float) -> float:
    """Bound for ``sum_{i >= 0} E(x0 + i spacing)`` with ``E`` the real-line envelope."""
    norms = bump.derivative_l1_norms()
    first = float(bump.pw_envelope_real(x0))
    integral = min(norms[k] * x0 ** (1 - k) / (k - 1) for k in range(2, len(norms)))
    return first + integral / spacing


def lattice_tail_bound(ell0: float, k_max: int, n_max: int, a: float, b: float, lam: float, rule=CALIBRATED_RULE) -> float:
    """Paley-Wiener bound on the pairing terms of lattice points outside the box.

    Each term obeys ``|a phi_hat(a z) e^{-i b z}| <= a e^{-(b - a)(k + 1/2)} E(a |Re z|)``
    with ``E(x) = min_K ||phi^{(K)}||_1 / x^K``.  Columns ``|n| > n_max`` are
    summed with an integral comparison, rows ``k > k_max`` as a geometric
    series (with polynomial multiplicities bounded termwise).
    """
    rule = MultiplicityRule(rule)
    step = 2.0 * math.pi / ell0
    decay = b - a
    if decay <= 0:
        raise ConfigurationError("need b > a for the resonance sum to converge")

    def column_tail(nm):
        # sum over |n| > nm and both iota of E(a |step n + iota lam|)
        x0 = a * (step * (nm + 1) - lam)
        if x0 <= 0:
            return math.inf
        return 4.0 * _envelope_sum_tail(x0, a * step)

    def full_row():
        n_mid = int(math.ceil(lam / step)) + 1
        n = np.arange(-n_mid, n_mid + 1)
        inner = np.sum(bump.pw_envelope_real(a * (step * n + lam))) + np.sum(bump.pw_envelope_real(a * (step * n - lam)))
        return float(inner) + column_tail(n_mid)

    def row_weight(k):
        return rule(k) * math.exp(-decay * (k + 0.5))

    # rows beyond k_max: multiplicity at most 2k+1, summed as a series
    q = math.exp(-decay)
    k1 = k_max + 1
    if rule is MultiplicityRule.ODD:
        # sum_{k>=k1} (2k+1) q^{k+1/2}
        series = q ** (k1 + 0.5) * ((2 * k1 + 1) / (1 - q) + 2 * q / (1 - q) ** 2)
    else:
        series = rule(0) * q ** (k1 + 0.5) / (1 - q)
    rows = a * series * full_row()
    cols = a * sum(row_weight(k) for k in range(k_max + 1)) * column_tail(n_max)
    return rows + cols


def required_box(ell0: float, test: WindowedTest, tol: float = DEFAULT_TOL, rule=CALIBRATED_RULE) -> tuple[int, int]:
    """Smallest ``(k_max, n_max)`` whose lattice tail bound is at most ``tol``."""
    lam = _lam_float(test)
    a, b = test.a, test.b
    step = 2.0 * math.pi / ell0
    k_max = 0
    while lattice_tail_bound(ell0, k_max, 10 ** 9, a, b, lam, rule) > tol / 2:
        k_max += 1
        if k_max > 10_000:
            raise TruncationError("row tail does not decay")
    n_max = int(math.ceil(lam / step)) + 1
    hi = n_max
    while lattice_tail_bound(ell0, k_max, hi, a, b, lam, rule) > tol:
        hi *= 2
    lo = n_max
    while lo < hi:
        mid = (lo + hi) // 2
        if lattice_tail_bound(ell0, k_max, mid, a, b, lam, rule) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return k_max, hi


def spectral_side(resonances: ResonanceSet, test: WindowedTest, tol: float = DEFAULT_TOL) -> TraceEvaluation:
    """Resonance-side pairing with ``2 cos(lam t) phi((t - b) / a)``.

    For a truncated cylinder lattice the omitted points are bounded with the
    Paley-Wiener envelope; when that bound exceeds ``tol`` a
    :class:`TruncationError` names the box that would suffice.  Other sets
    are treated as complete and summed exactly.
    """
    lam = _lam_float(test)
    a, b = test.a, test.b
    bound = 0.0
    prov = resonances.provenance
    if isinstance(prov, CylinderLattice):
        bound = lattice_tail_bound(prov.ell0, prov.k_max, prov.n_max, a, b, lam, prov.rule)
        if bound > tol:
            need = required_box(prov.ell0, test, tol, prov.rule)
            raise TruncationError(
                f"tail bound {bound:.3g} exceeds tol {tol:.3g}; need k_max={need[0]}, n_max={need[1]}"
            )
    values = resonances.values
    terms = resonances.multiplicities * pairing_terms(values, a, b, lam)
    value = complex(math.fsum(terms.real), math.fsum(terms.imag))
    rows = {}
    for z, t in zip(values, terms):
        rows.setdefault(-z.imag, []).append(t)
    row_sums = {k: complex(math.fsum(np.real(v)), math.fsum(np.imag(v))) for k, v in sorted(rows.items())}
    return TraceEvaluation(value, bound, len(resonances), CALIBRATED_ORIENTED, details={"rows": row_sums})


# ---------------------------------------------------------------------------
# calibration against the orbit side


@dataclass(frozen=True)
class CalibrationResult:
    rule: MultiplicityRule
    oriented: bool
    table: tuple  # (rule, oriented, max excess over truncation bound)
    winners: tuple


def cylinder_discrepancy(
    ell0: float,
    T: float,
    lam: float,
    rule: MultiplicityRule | str = CALIBRATED_RULE,
    oriented: bool = CALIBRATED_ORIENTED,
    tol: float = DEFAULT_TOL,
):
    """``(|spectral - Re geometric|, truncation bound)`` for a second-window test at ``T``."""
    from trappedset.generators import CylinderConfig, enumerate_cylinder

    test = WindowedTest.phi2(T, lam)
    k_max, n_max = required_box(ell0, test, tol, rule)
    res = cylinder_lattice(ell0, k_max, n_max, rule)
    spec = spectral_side(res, test, tol)
    geo = geometric_side(enumerate_cylinder(CylinderConfig(ell0), T, oriented), test)
    return abs(spec.value - geo.real), spec.truncation_bound


def calibrate_cylinder(
    ell0: float = 2.0,
    T_values: Sequence[float] = (6.5, 8.5, 10.5),
    lambdas: Sequence[float] = (50.0, 100.0, 500.0),
    slack: float = 1e-6,
) -> CalibrationResult:
    """Try every multiplicity rule with both orientation conventions.

    A convention wins when ``|spectral - Re geometric| <= bound + slack`` on
    every test.  The first winner in the order (unit, two, odd) x (oriented,
    unoriented) is returned along with the full table of excesses.
    """
    table, winners = [], []
    for rule in MultiplicityRule:
        for oriented in (True, False):
            excess = max(
                d - bnd
                for T in T_values
                for lam in lambdas
                for d, bnd in [cylinder_discrepancy(ell0, T, lam, rule, oriented)]
            )
            table.append((rule, oriented, excess))
            if excess <= slack:
                winners.append((rule, oriented))
    if not winners:
        raise RuntimeError(f"no convention satisfies the cylinder identity: {table}")
    return CalibrationResult(winners[0][0], winners[0][1], tuple(table), tuple(winners))


# ---------------------------------------------------------------------------
# strip counting


@dataclass(frozen=True)
class StripMeasure:
    s: float
    atoms: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        order = np.argsort(self.atoms, kind="stable")
        object.__setattr__(self, "atoms", np.asarray(self.atoms, float)[order])
        object.__setattr__(self, "multiplicities", np.asarray(self.multiplicities, float)[order])

    @property
    def total(self) -> float:
        return float(np.sum(self.multiplicities))

    def mass(self, lo: float, hi: float) -> float:
        """Mass of the closed interval ``[lo, hi]``."""
        i = bisect.bisect_left(self.atoms, lo)
        j = bisect.bisect_right(self.atoms, hi)
        return float(np.sum(self.multiplicities[i:j]))

    def folded(self) -> "StripMeasure":
        """Push-forward under ``r -> |r|``."""
        return StripMeasure(self.s, np.abs(self.atoms), self.multiplicities)


def strip_measure(resonances: ResonanceSet, s: float) -> StripMeasure:
    """Real parts of resonances with ``-s <= Im <= 0``."""
    if not s > 0:
        raise ConfigurationError("strip depth must be positive")
    keep = [r for r in resonances if -s <= r.lam.imag <= IM_TOL]
    return StripMeasure(
        s, np.array([r.lam.real for r in keep], float), np.array([r.multiplicity for r in keep], float)
    )


def strip_count(measure: StripMeasure, r: float) -> int:
    """Number of atoms with ``|atom| <= r`` (inclusive), with multiplicity."""
    if not r > 0:
        raise ConfigurationError("r must be positive")
    return int(round(measure.mass(-r, r)))


@dataclass(frozen=True)
class CountFit:
    slope: float
    intercept: float
    r: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)


def fit_count_slope(measure: StripMeasure, r_grid) -> CountFit:
    """Least-squares line through ``strip_count(r)`` against ``r``."""
    r = np.asarray(r_grid, float)
    n = np.array([strip_count(measure, x) for x in r], float)
    slope, intercept = np.polyfit(r, n, 1)
    return CountFit(float(slope), float(intercept), r, n)


def fit_count_exponent(measure: StripMeasure, r_grid) -> CountFit:
    """Least-squares slope of ``log strip_count(r)`` against ``log r``."""
    r = np.asarray(r_grid, float)
    n = np.array([strip_count(measure, x) for x in r], float)
    keep = n > 0
    if keep.sum() < 2:
        raise InsufficientDataError("need at least two nonzero counts")
    slope, intercept = np.polyfit(np.log(r[keep]), np.log(n[keep]), 1)
    return CountFit(float(slope), float(intercept), r, n)


@dataclass(frozen=True)
class PowerBoundCheck:
    exponent: float
    constant: float
    holds: bool
    failures: tuple


def power_lower_bound_check(measure: StripMeasure, r_grid, exponent: float) -> PowerBoundCheck:
    """Fit ``C = min N(r) / r^exponent`` on the first half of the grid; check ``N >= C r^exponent`` on the second."""
    r = np.asarray(r_grid, float)
    n = np.array([strip_count(measure, x) for x in r], float)
    half = len(r) // 2
    if half < 1:
        raise InsufficientDataError("grid too short")
    C = float(np.min(n[:half] / r[:half] ** exponent))
    bad = tuple(float(x) for x, c in zip(r[half:], n[half:]) if c < C * x ** exponent)
    return PowerBoundCheck(exponent, C, not bad, bad)


@dataclass(frozen=True)
class WindowRow:
    beta: float
    half_width: float
    mass: float
    target: float
    ratio: float
    empty: bool


def window_lower_bound_check(
    measure: StripMeasure,
    beta_grid,
    epsilon: float,
    J_plus: float,
    nu: float,
    theta_plus_u: float = 0.5,
) -> list[WindowRow]:
    """Mass of ``[beta - w, beta + w] u [-beta - w, -beta + w]`` with ``w = beta^{nu + eps J+}``.

    The ratio is taken against ``beta^{eps (J+ - theta)}``; empty windows are
    flagged.  Overlapping windows are counted once.
    """
    rows = []
    for beta in beta_grid:
        w = beta ** (nu + epsilon * J_plus)
        if beta - w <= -beta + w:
            mass = measure.mass(-beta - w, beta + w)
        else:
            mass = measure.mass(beta - w, beta + w) + measure.mass(-beta - w, -beta + w)
        target = beta ** (epsilon * (J_plus - theta_plus_u))
        rows.append(WindowRow(float(beta), w, mass, target, mass / target, mass == 0))
    return rows


@dataclass(frozen=True)
class TauberianVerdict:
    hypothesis_held: bool
    conclusion_held: bool
    c1: float
    c2: float
    violations: tuple
    r_grid: np.ndarray = field(repr=False)

    @property
    def verdict(self) -> bool:
        return self.hypothesis_held and self.conclusion_held

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None


def tauberian_accumulate(
    measure: StripMeasure,
    delta: float,
    kappa: float,
    c: float,
    r0: float,
    r_max: float | None = None,
    n_grid: int = 64,
) -> TauberianVerdict:
    """Check ``mu([r, r + r^delta]) >= c r^{kappa + delta}`` and fit ``mu([0, r]) >= c1 r^{1 + kappa} - c2``.

    The measure is folded onto ``[0, inf)``.  The grid is log-spaced from
    ``r0`` to ``r_max`` (default: the largest ``r`` with ``r + r^delta`` at
    most the largest atom).  ``c1`` is the smallest ratio
    ``mu([0, r]) / r^{1 + kappa}`` over the upper half of the grid and ``c2``
    the least offset making the bound hold on the whole grid.
    """
    if not 0 < delta < 1:
        raise ConfigurationError("delta must lie in (0, 1)")
    if kappa + delta < 0:
        raise ConfigurationError("need kappa + delta >= 0")
    if measure.total == 0:
        raise InsufficientDataError("empty measure")
    mu = measure.folded()
    top = float(mu.atoms[-1])
    if r_max is None:
        lo, hi = r0, max(top, r0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if mid + mid ** delta <= top else (lo, mid)
        r_max = lo
    if r_max <= r0:
        r_max = r0 * 10.0
    r = np.geomspace(r0, r_max, n_grid)
    violations = tuple(
        float(x) for x in r if mu.mass(x, x + x ** delta) < c * x ** (kappa + delta)
    )
    cum = np.array([mu.mass(0.0, x) for x in r])
    upper = r[n_grid // 2 :]
    c1 = float(np.min(cum[n_grid // 2 :] / upper ** (1 + kappa)))
    c2 = float(max(0.0, np.max(c1 * r ** (1 + kappa) - cum)))
    return TauberianVerdict(not violations, c1 > 0, c1, c2, violations, r)


# ---------------------------------------------------------------------------
# synthetic ensembles


@dataclass(frozen=True)
class Lattice:
    """Atoms ``0, spacing, 2 spacing, ...`` up to ``r_max`` on rows ``-(k + 1/2)``."""

    spacing: float
    depth_rows: int = 1
    r_max: float = 1000.0


@dataclass(frozen=True)
class PowerLaw:
    """``N(r) = r^exponent`` on ``[1, r_max]``: atoms at ``(i + u_i)^{1/exponent}`` with ``u_i`` uniform."""

    exponent: float
    depth: float = 1.0
    r_max: float = 1000.0


@dataclass(frozen=True)
class Poisson:
    """Homogeneous Poisson process of the given intensity on ``[0, r_max]``."""

    intensity: float
    depth: float = 1.0
    r_max: float = 1000.0


def synthetic_ensemble(descriptor, seed: int = 0) -> ResonanceSet:
    """Deterministic synthetic resonance set with a known counting law."""
    rng = np.random.default_rng(seed)
    if isinstance(descriptor, Lattice):
        if not (descriptor.spacing > 0 and descriptor.depth_rows >= 1 and descriptor.r_max > 0):
            raise ConfigurationError(f"invalid lattice descriptor {descriptor}")
        n = int(math.floor(descriptor.r_max / descriptor.spacing + 1e-9))
        entries = [
            Resonance(complex(descriptor.spacing * i, -(k + 0.5)))
            for k in range(descriptor.depth_rows)
            for i in range(n + 1)
        ]
    elif isinstance(descriptor, PowerLaw):
        if not (descriptor.exponent > 0 and descriptor.depth > 0 and descriptor.r_max > 1):
            raise ConfigurationError(f"invalid power-law descriptor {descriptor}")
        n = int(descriptor.r_max ** descriptor.exponent)
        u = rng.uniform(size=n)
        re = (np.arange(1, n + 1) - u) ** (1.0 / descriptor.exponent)
        im = -descriptor.depth * rng.uniform(size=n)
        entries = [Resonance(complex(x, y)) for x, y in zip(re, im)]
    elif isinstance(descriptor, Poisson):
        if not (descriptor.intensity > 0 and descriptor.depth > 0 and descriptor.r_max > 0):
            raise ConfigurationError(f"invalid Poisson descriptor {descriptor}")
        n = rng.poisson(descriptor.intensity * descriptor.r_max)
        re = np.sort(rng.uniform(0.0, descriptor.r_max, size=n))
        im = -descriptor.depth * rng.uniform(size=n)
        entries = [Resonance(complex(x, y)) for x, y in zip(re, im)]
    else:
        raise ConfigurationError(f"unknown ensemble descriptor {descriptor!r}")
    return ResonanceSet(tuple(entries), Synthetic(seed, descriptor))


# ---------------------------------------------------------------------------
# CSV


RESONANCE_HEADER = ("re", "im", "multiplicity")


def write_resonances(path, resonances: ResonanceSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESONANCE_HEADER)
        for r in resonances:
            w.writerow([f"{r.lam.real:.17g}", f"{r.lam.imag:.17g}", r.multiplicity])


def read_resonances(path) -> ResonanceSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != RESONANCE_HEADER:
        raise ConfigurationError(f"{path}: header must be {','.join(RESONANCE_HEADER)}")
    entries = []
    for i, row in enumerate(rows[1:], start=2):
        try:
            entries.append(Resonance(complex(float(row[0]), float(row[1])), int(row[2])))
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"{path}:{i}: {exc}") from exc
    return ResonanceSet(tuple(entries), FileSource(str(path)))
