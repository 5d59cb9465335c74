"""Rank-two Schottky groups: ping-pong validation and conjugacy-class enumeration.

Closed geodesics of the quotient surface correspond to conjugacy classes of
the free group ``<A, B>``; each class is represented by its canonical
cyclically reduced word and its length is ``2 arccosh(|tr M_w| / 2)``.

Completeness below a horizon is certified by branch and bound on the word
tree.  After conjugating the group so that the four isometric disks are
disjoint, a letter ``g`` followed by ``h`` contracts the ping-pong disk of
``h^-1`` by at most ``kappa(g, h) < 1``; the length of any cyclically reduced
word is then at least ``sum(-log kappa)`` over its cyclic letter pairs, which
gives a lower bound for every extension of a prefix.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from trappedset.errors import ConfigurationError, ResourceCapError
from trappedset.orbits import (
    LengthSpectrum,
    Model,
    OrbitCode,
    descriptor_hash,
    invert_word,
    least_rotation,
    surface_orbit,
)

DEFAULT_ORBIT_CAP = 10_000_000
# Look-ahead used by the branch-and-bound length bound.
BOUND_DEPTH = 4
# base points are kept within e^{+-BASE_LOG_RANGE} of the real axis scale
BASE_LOG_RANGE = 12.0

Matrix = tuple[tuple[float, float], tuple[float, float]]

# Cayley transform from the upper half plane to the unit disk.
_CAYLEY = np.array([[1.0, -1.0j], [1.0, 1.0j]])
_CAYLEY_INV = np.linalg.inv(_CAYLEY)


def _as_matrix(m) -> Matrix:
    a = np.asarray(m, dtype=float)
    if a.shape != (2, 2):
        raise ConfigurationError(f"generator must be 2x2, got shape {a.shape}")
    return ((float(a[0, 0]), float(a[0, 1])), (float(a[1, 0]), float(a[1, 1])))


def _inverse(m: Matrix) -> Matrix:
    (a, b), (c, d) = m
    return ((d, -b), (-c, a))


def length_from_trace(trace: float) -> float:
    """Translation length ``2 arccosh(|t|/2)`` without cancellation for large traces."""
    t = abs(trace)
    if t <= 2.0:
        raise ValueError(f"|trace| = {t} is not hyperbolic")
    return 2.0 * math.log((t + math.sqrt((t - 2.0) * (t + 2.0))) / 2.0)


@dataclass(frozen=True)
class SchottkyConfig:
    generator_a: Matrix
    generator_b: Matrix
    validated: bool = False
    # -log kappa(g, h) for every admissible letter pair, set by validation.
    pair_expansion: tuple[tuple[float, ...], ...] | None = field(default=None, compare=False)
    base_point: complex | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "generator_a", _as_matrix(self.generator_a))
        object.__setattr__(self, "generator_b", _as_matrix(self.generator_b))
        for name, m in (("A", self.generator_a), ("B", self.generator_b)):
            (a, b), (c, d) = m
            det = a * d - b * c
            if abs(det - 1.0) > 1e-12:
                raise ConfigurationError(f"generator {name}: det = {det!r}, expected 1")
            if not abs(a + d) > 2.0:
                raise ConfigurationError(f"generator {name}: |trace| = {abs(a + d)!r} must exceed 2")

    @property
    def letters(self) -> tuple[Matrix, Matrix, Matrix, Matrix]:
        return (self.generator_a, _inverse(self.generator_a), self.generator_b, _inverse(self.generator_b))

    def descriptor(self) -> str:
        return descriptor_hash(f"schottky:{self.generator_a!r}:{self.generator_b!r}")

    @property
    def min_letter_expansion(self) -> float:
        """Smallest per-letter length increment ``2 log sigma_-``."""
        if self.pair_expansion is None:
            raise ConfigurationError("configuration not validated")
        return min(v for row in self.pair_expansion for v in row if v > 0)


def schottky_generators(funnel_length: float = 2.0, axis_b: tuple[float, float] = (1.0, 2.0)):
    """Generators ``A = diag(e^{l/2}, e^{-l/2})`` and ``B`` conjugate to ``A`` with axis ``axis_b``."""
    p, q = axis_b
    if not 0 < p < q:
        raise ConfigurationError("axis_b must satisfy 0 < p < q")
    h = funnel_length / 2.0
    a = np.diag([math.exp(h), math.exp(-h)])
    # C maps 0 -> p and infinity -> q, normalised to det 1.
    c = np.array([[q, p], [1.0, 1.0]]) / math.sqrt(q - p)
    b = c @ a @ np.linalg.inv(c)
    return a, b


def default_schottky(funnel_length: float = 2.0) -> SchottkyConfig:
    """The fixed reference group, already validated."""
    a, b = schottky_generators(funnel_length)
    report = validate_schottky(SchottkyConfig(a, b))
    if not report.accepted:
        raise ConfigurationError(f"default Schottky group failed validation:\n{report}")
    return report.config


@dataclass(frozen=True)
class ValidationReport:
    accepted: bool
    base_point: complex
    centers: tuple[complex, ...]
    radii: tuple[float, ...]
    gaps: dict
    config: SchottkyConfig | None
    message: str = ""

    @property
    def min_gap(self) -> float:
        return min(self.gaps.values())

    def __str__(self) -> str:
        lines = [f"accepted: {self.accepted}", f"base point: {self.base_point:.6g}"]
        names = ["A", "A^-1", "B", "B^-1"]
        for (i, j), g in sorted(self.gaps.items()):
            lines.append(f"gap({names[i]}, {names[j]}) = {g:.6g}")
        if self.message:
            lines.append(self.message)
        return "\n".join(lines)


def _isometric_disks(letters, base_point: complex):
    """Isometric circles in the disk model centred at ``base_point``."""
    x, y = base_point.real, base_point.imag
    s = math.sqrt(y)
    move = np.array([[s, x / s], [0.0, 1.0 / s]])  # i -> base_point
    conj_l = _CAYLEY @ np.linalg.inv(move)
    conj_r = move @ _CAYLEY_INV
    centers, radii = [], []
    for m in letters:
        g = conj_l @ np.asarray(m) @ conj_r
        g = g / np.sqrt(np.linalg.det(g))
        c, d = g[1, 0], g[1, 1]
        if abs(c) < 1e-14:
            return None
        centers.append(complex(-d / c))
        radii.append(float(1.0 / abs(c)))
    return centers, radii


def _gaps(centers, radii) -> dict:
    return {
        (i, j): abs(centers[i] - centers[j]) - radii[i] - radii[j]
        for i in range(4)
        for j in range(i + 1, 4)
    }


def ping_pong_holds(gaps: dict) -> bool:
    """True iff every pairwise gap between closed disks is strictly positive."""
    return bool(gaps) and all(g > 0.0 for g in gaps.values())


def _axis_top(m: Matrix) -> complex:
    """Highest point of the axis of a hyperbolic element (upper half plane)."""
    (a, b), (c, d) = m
    if abs(c) < 1e-14:
        return 1j
    t = a + d
    disc = math.sqrt(t * t - 4.0)
    p1 = (a - d + disc) / (2 * c)
    p2 = (a - d - disc) / (2 * c)
    return complex((p1 + p2) / 2, abs(p1 - p2) / 2)


def validate_schottky(config: SchottkyConfig) -> ValidationReport:
    """Check the ping-pong condition on isometric disks.

    The group is conjugated into the disk model around a base point; the
    base point is chosen among ``i``, the tops of the two axes and a local
    maximiser of the smallest pairwise gap.  The configuration is accepted
    iff all four closed disks are pairwise disjoint for some attempted base
    point.
    """
    letters = config.letters

    def min_gap(v):
        if not -BASE_LOG_RANGE < v[1] < BASE_LOG_RANGE:
            return math.inf
        p = complex(v[0], math.exp(v[1]))
        disks = _isometric_disks(letters, p)
        if disks is None:
            return math.inf
        gaps = list(_gaps(*disks).values())
        if not all(math.isfinite(g) for g in gaps):
            return math.inf
        return -min(gaps)

    ta, tb = _axis_top(config.generator_a), _axis_top(config.generator_b)
    starts = [1j, ta, tb, (ta + tb) / 2]
    best = None
    for p0 in starts:
        v0 = np.array([p0.real, math.log(p0.imag)])
        res = minimize(min_gap, v0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        for v in (v0, res.x):
            val = min_gap(v)
            if best is None or val < best[0]:
                best = (val, complex(v[0], math.exp(v[1])))
    if best is None or not math.isfinite(best[0]):
        return ValidationReport(
            False, 1j, (), (), {}, None, "axis at infinity; supply conjugated generators"
        )
    base = best[1]
    centers, radii = _isometric_disks(letters, base)
    gaps = _gaps(centers, radii)
    if not ping_pong_holds(gaps):
        return ValidationReport(
            False, base, tuple(centers), tuple(radii), gaps, None,
            "isometric disks intersect: ping-pong condition fails",
        )
    table = []
    for g in range(4):
        row = []
        for h in range(4):
            if h == g ^ 1:
                row.append(0.0)
                continue
            hin = h ^ 1
            dist = abs(centers[g] - centers[hin]) - radii[hin]
            row.append(-2.0 * math.log(radii[g] / dist))
        table.append(tuple(row))
    validated = SchottkyConfig(config.generator_a, config.generator_b, True, tuple(table), base)
    return ValidationReport(True, base, tuple(centers), tuple(radii), gaps, validated)


def _mul(m, g):
    (a, b), (c, d) = m
    (e, f), (h, k) = g
    return ((a * e + b * h, a * f + b * k), (c * e + d * h, c * f + d * k))


def _word_trace(letters, word) -> float:
    m = ((1.0, 0.0), (0.0, 1.0))
    for x in word:
        m = _mul(m, letters[x])
    return m[0][0] + m[1][1]


def _disk_image(m: np.ndarray, center: complex, radius: float):
    """Image of a closed disk under a Moebius map whose pole lies outside it."""
    pts = [center + radius * np.exp(2j * math.pi * k / 3) for k in range(3)]
    w = [(m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1]) for z in pts]
    # circumcircle of three points
    a, b, c = w
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag) + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real) + abs(c) ** 2 * (b.real - a.real)) / d
    cen = complex(ux, uy)
    return cen, abs(a - cen)


def expansion_tables(config: SchottkyConfig, depth: int):
    """Lower bounds on the length contributed by one letter.

    ``tables[j][(g, h_1, ..., h_j)]`` bounds ``-log |g'|`` at the orbit point
    that follows ``g`` when only the next ``j`` letters are known (minimised
    over all reduced continuations); ``j = depth`` uses the exact nested
    disk ``h_1 ... h_{depth-1}(I(h_depth^-1))``.
    """
    report_base = config.base_point
    if report_base is None:
        raise ConfigurationError("configuration not validated")
    letters = config.letters
    centers, radii = _isometric_disks(letters, report_base)
    x, y = report_base.real, report_base.imag
    s = math.sqrt(y)
    move = np.array([[s, x / s], [0.0, 1.0 / s]])
    conj_l = _CAYLEY @ np.linalg.inv(move)
    conj_r = move @ _CAYLEY_INV
    disk_maps = [conj_l @ np.asarray(m) @ conj_r for m in letters]

    full = {}
    for word in _prefixes(depth + 1):
        g, follow = word[0], word[1:]
        cen, rad = centers[follow[-1] ^ 1], radii[follow[-1] ^ 1]
        for h in reversed(follow[:-1]):
            cen, rad = _disk_image(disk_maps[h], cen, rad)
        dist = abs(centers[g] - cen) - rad
        full[word] = -2.0 * math.log(radii[g] / dist)
    tables = [None] * (depth + 1)
    tables[depth] = full
    for j in range(depth - 1, -1, -1):
        nxt = tables[j + 1]
        cur = {}
        for word, v in nxt.items():
            key = word[:-1]
            cur[key] = min(cur.get(key, math.inf), v)
        tables[j] = cur
    return tables


def _walk(letters, tables, prefix, horizon, max_word_length, oriented, cap):
    """Depth-first enumeration of canonical words below ``prefix``.

    Words are generated as prenecklaces (Fredricksen-Kessler-Maiorana
    invariant: ``p`` is the period of the longest Lyndon prefix), so every
    necklace is reached exactly once.  With a horizon, a branch is cut when
    the certified length lower bound of every cyclically reduced extension
    exceeds it.  Returns ``(word, primitive_word, repetition, primitive_length)``.
    """
    depth = len(tables) - 1 if tables else 0
    out = []

    def bound(w, full_sum):
        n = len(w)
        total = full_sum
        for i in range(max(0, n - depth), n):
            total += tables[n - 1 - i][w[i:]]
        return total

    if prefix:
        p = 1
        for i in range(1, len(prefix)):
            if prefix[i] < prefix[i - p]:
                return out
            if prefix[i] > prefix[i - p]:
                p = i + 1
        m = ((1.0, 0.0), (0.0, 1.0))
        for x in prefix:
            m = _mul(m, letters[x])
        full = 0.0
        if tables:
            for i in range(len(prefix) - depth):
                full += tables[depth][prefix[i:i + depth + 1]]
        stack = [(tuple(prefix), m, full, p)]
    else:
        stack = [((x,), letters[x], 0.0, 1) for x in (3, 2, 1, 0)]
    while stack:
        w, m, full, p = stack.pop()
        n = len(w)
        if horizon is not None and bound(w, full) > horizon:
            continue
        if n % p == 0 and w[0] != w[-1] ^ 1:
            _record(out, w, m, p, horizon, oriented, letters)
            if len(out) > cap:
                raise ResourceCapError(f"orbit count exceeds orbit_cap={cap}")
        if max_word_length is not None and n >= max_word_length:
            continue
        last = w[-1]
        for x in (3, 2, 1, 0):
            if x == last ^ 1:
                continue
            ref = w[n - p]
            if x < ref:
                continue
            newp = p if x == ref else n + 1
            w2 = w + (x,)
            f2 = full
            if tables and n + 1 > depth:
                f2 += tables[depth][w2[n - depth:]]
            stack.append((w2, _mul(m, letters[x]), f2, newp))
    return out


def _record(out, w, m, p, horizon, oriented, letters):
    if not oriented and w > least_rotation(invert_word(w)):
        return
    rep = len(w) // p
    if rep == 1:
        trace = m[0][0] + m[1][1]
        ell = length_from_trace(trace)
        if horizon is not None and ell > horizon:
            return
        out.append((w, w, 1, ell))
    else:
        root = w[:p]
        ell = rep * length_from_trace(_word_trace(letters, root))
        if horizon is not None and ell > horizon:
            return
        out.append((w, root, rep, ell / rep))


def _prefixes(depth: int):
    """Reduced words of length ``depth`` (task seeds for parallel runs)."""
    words = [(x,) for x in range(4)]
    for _ in range(depth - 1):
        words = [w + (x,) for w in words for x in range(4) if x != w[-1] ^ 1]
    return words


def _task(args):
    return _walk(*args)


def worker_count() -> int:
    env = os.environ.get("TRAPPEDSET_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _enumerate(config, horizon, max_word_length, oriented, orbit_cap, workers, depth=BOUND_DEPTH):
    letters = config.letters
    expansion = expansion_tables(config, depth) if horizon is not None else None
    if workers is None:
        workers = worker_count()
    if workers <= 1:
        records = _walk(letters, expansion, (), horizon, max_word_length, oriented, orbit_cap)
    else:
        # Seeds of length 2 cover every word of length >= 2; words of length
        # one are handled by the single-letter seeds with max length 1.
        seeds = [((x,), 1) for x in range(4)] + [(w, max_word_length) for w in _prefixes(2)]
        tasks = [(letters, expansion, w, horizon, ml, oriented, orbit_cap) for w, ml in seeds]
        records = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_task, tasks):
                records.extend(part)
    if len(records) > orbit_cap:
        raise ResourceCapError(f"orbit count exceeds orbit_cap={orbit_cap}")
    return records


def enumerate_schottky(
    config: SchottkyConfig,
    horizon: float,
    oriented: bool = False,
    orbit_cap: int = DEFAULT_ORBIT_CAP,
    workers: int | None = 1,
) -> LengthSpectrum:
    """All closed geodesics of length ``<= horizon``, one per (oriented) conjugacy class."""
    if not config.validated:
        raise ConfigurationError("Schottky configuration must be validated before enumeration")
    records = _enumerate(config, horizon, None, oriented, orbit_cap, workers)
    orbits = [
        surface_orbit(OrbitCode(Model.SCHOTTKY, w), lp, rep) for w, _root, rep, lp in records
    ]
    return LengthSpectrum(
        orbits=tuple(orbits),
        horizon=horizon,
        model_descriptor=config.descriptor(),
        complete=True,
        oriented=oriented,
    )


def enumerate_schottky_words(
    config: SchottkyConfig, max_word_length: int, oriented: bool = False, workers: int | None = 1
):
    """Canonical conjugacy-class words of word length ``<= max_word_length``.

    Returns ``(word, repetition, primitive_length)`` triples; no length
    cutoff is applied, so the configuration need not be validated.
    """
    records = _enumerate(config, None, max_word_length, oriented, DEFAULT_ORBIT_CAP, workers)
    return sorted((w, rep, lp) for w, _root, rep, lp in records)
