"""Periodic orbits, length spectra and trace-formula amplitudes.

An orbit is named by an :class:`OrbitCode` (the combinatorial word of the
model it belongs to) and carries its length, primitive length, repetition
count, integrated unstable exponent and ``log|det(1 - P_gamma)|``.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence


class Model(str, enum.Enum):
    CYLINDER = "cylinder"
    SCHOTTKY = "schottky"
    THREE_DISK = "three_disk"


# Schottky letters: 0 = A, 1 = A^-1, 2 = B, 3 = B^-1.  Inverse is ``x ^ 1``
# and the integer order is the canonical order A < A^-1 < B < B^-1.
SCHOTTKY_LETTERS = "aAbB"
# Cylinder letters: 0 = the core geodesic, 1 = the same geodesic reversed.
CYLINDER_LETTERS = "aA"


def invert_word(word: Sequence[int]) -> tuple[int, ...]:
    """Formal inverse of a free-group word in integer letters."""
    return tuple(x ^ 1 for x in reversed(word))


def is_reduced(word: Sequence[int]) -> bool:
    return all(word[i] != word[i + 1] ^ 1 for i in range(len(word) - 1))


def is_cyclically_reduced(word: Sequence[int]) -> bool:
    if not word:
        return False
    return is_reduced(word) and (len(word) == 1 or word[0] != word[-1] ^ 1)


def cyclic_reduce(word: Sequence[int]) -> tuple[int, ...]:
    """Freely and cyclically reduce ``word``."""
    stack: list[int] = []
    for x in word:
        if stack and stack[-1] == x ^ 1:
            stack.pop()
        else:
            stack.append(x)
    lo, hi = 0, len(stack)
    while hi - lo >= 2 and stack[lo] == stack[hi - 1] ^ 1:
        lo += 1
        hi -= 1
    return tuple(stack[lo:hi])


def least_rotation(word: Sequence[int]) -> tuple[int, ...]:
    w = tuple(word)
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def canonical_word(word: Sequence[int], oriented: bool = False) -> tuple[int, ...]:
    """Canonical representative of the conjugacy class of ``word``.

    The word is first cyclically reduced.  With ``oriented=False`` the
    representative is the lexicographically least rotation of the word or
    of its inverse (so ``w`` and ``w^-1`` share one code); with
    ``oriented=True`` only rotations of ``w`` itself are considered.
    """
    w = cyclic_reduce(word)
    best = least_rotation(w)
    if not oriented:
        best = min(best, least_rotation(invert_word(w)))
    return best


def primitive_root(word: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Return ``(root, m)`` with ``word == root * m`` and ``m`` maximal."""
    w = tuple(word)
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w[:p] * (n // p) == w:
            return w[:p], n // p
    return w, 1


@dataclass(frozen=True, order=True)
class OrbitCode:
    """Combinatorial name of a closed orbit.

    ``symbols`` holds integer letters: Schottky words over ``0..3`` (see
    :data:`SCHOTTKY_LETTERS`), three-disk sequences over ``1..3``, and for
    the cylinder ``m`` copies of the orientation letter (0 or 1).
    """

    model: Model
    symbols: tuple[int, ...]

    def __post_init__(self) -> None:
        s = self.symbols
        if not s:
            raise ValueError("empty orbit code")
        if self.model is Model.SCHOTTKY:
            if any(x not in (0, 1, 2, 3) for x in s) or not is_cyclically_reduced(s):
                raise ValueError(f"not a cyclically reduced word: {s}")
        elif self.model is Model.THREE_DISK:
            if any(x not in (1, 2, 3) for x in s):
                raise ValueError(f"three-disk symbols must be 1..3: {s}")
            if len(s) < 2 or any(s[i] == s[(i + 1) % len(s)] for i in range(len(s))):
                raise ValueError(f"three-disk code has a repeated symbol: {s}")
        elif self.model is Model.CYLINDER:
            if len(set(s)) != 1 or s[0] not in (0, 1):
                raise ValueError(f"bad cylinder code: {s}")

    def __str__(self) -> str:
        if self.model is Model.SCHOTTKY:
            return "".join(SCHOTTKY_LETTERS[x] for x in self.symbols)
        if self.model is Model.CYLINDER:
            return "".join(CYLINDER_LETTERS[x] for x in self.symbols)
        return "".join(str(x) for x in self.symbols)

    @classmethod
    def parse(cls, model: Model | str, text: str) -> "OrbitCode":
        model = Model(model)
        if model is Model.SCHOTTKY:
            return cls(model, tuple(SCHOTTKY_LETTERS.index(c) for c in text))
        if model is Model.CYLINDER:
            return cls(model, tuple(CYLINDER_LETTERS.index(c) for c in text))
        return cls(model, tuple(int(c) for c in text))


def surface_log_stability(length: float) -> float:
    """``log (2 sinh(length/2))^2`` evaluated without overflow."""
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")
    return length + 2.0 * math.log(-math.expm1(-length))


def surface_stability_from_length(length: float) -> float:
    """``|det(1 - P)| = (2 sinh(length/2))^2`` for a constant-curvature surface.

    Evaluated as ``exp(length) * (1 - exp(-length))**2`` in the log domain.
    Beyond ``length ~ 1419`` the value is not representable and ``inf`` is
    returned; :func:`surface_log_stability` stays finite.
    """
    logdet = surface_log_stability(length)
    if logdet > 709.0:
        return math.inf
    return math.exp(logdet)


@dataclass(frozen=True)
class PeriodicOrbit:
    code: OrbitCode
    length: float
    primitive_length: float
    repetition: int
    unstable_exponent: float
    log_stability_det: float

    def __post_init__(self) -> None:
        vals = (self.length, self.primitive_length, self.unstable_exponent, self.log_stability_det)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite orbit data for {self.code}")
        if self.length <= 0 or self.primitive_length <= 0 or self.repetition < 1:
            raise ValueError(f"invalid orbit lengths for {self.code}")
        if abs(self.length - self.repetition * self.primitive_length) > 1e-12 * self.length:
            raise ValueError(f"length != repetition * primitive_length for {self.code}")

    @property
    def stability_det_abs(self) -> float:
        """``|det(1 - P_gamma)|``; ``inf`` once it exceeds double range."""
        if self.log_stability_det > 709.0:
            return math.inf
        return math.exp(self.log_stability_det)

    @property
    def log_unstable_factor(self) -> float:
        """``log|1 - Lambda|`` with ``Lambda`` the expanding multiplier.

        Uses ``|det(1-P)| = |1-Lambda|^2 / |Lambda|`` so no sign information is
        needed.
        """
        return 0.5 * (self.log_stability_det + self.unstable_exponent)


def amplitude(orbit: PeriodicOrbit) -> float:
    """Trace-formula weight ``l#(gamma) / sqrt|det(1 - P_gamma)|``."""
    if not (math.isfinite(orbit.primitive_length) and math.isfinite(orbit.log_stability_det)):
        raise ValueError("non-finite orbit fields")
    return math.exp(math.log(orbit.primitive_length) - 0.5 * orbit.log_stability_det)


def surface_orbit(code: OrbitCode, primitive_length: float, repetition: int = 1) -> PeriodicOrbit:
    """Orbit of a constant-curvature surface: exponent and stability from length."""
    length = repetition * primitive_length
    return PeriodicOrbit(
        code=code,
        length=length,
        primitive_length=primitive_length,
        repetition=repetition,
        unstable_exponent=length,
        log_stability_det=surface_log_stability(length),
    )


def expand_repetitions(primitive: PeriodicOrbit, horizon: float, log_stability=None) -> list[PeriodicOrbit]:
    """All iterates ``gamma^m`` with ``m * l# <= horizon``.

    ``log_stability(m)`` returns ``log|det(1 - P)|`` of the m-th iterate; the
    default assumes a constant-curvature surface.  The unstable exponent
    scales linearly with ``m``.
    """
    if primitive.repetition != 1:
        raise ValueError("expand_repetitions needs a primitive orbit")
    out = []
    m = 1
    lp = primitive.primitive_length
    while m * lp <= horizon:
        code = OrbitCode(primitive.code.model, primitive.code.symbols * m)
        if log_stability is None:
            logdet = surface_log_stability(m * lp)
        else:
            logdet = log_stability(m)
        out.append(
            PeriodicOrbit(
                code=code,
                length=m * lp,
                primitive_length=lp,
                repetition=m,
                unstable_exponent=m * primitive.unstable_exponent,
                log_stability_det=logdet,
            )
        )
        m += 1
    return out


def _sort_key(orbit: PeriodicOrbit):
    return (orbit.length, orbit.code.symbols)


@dataclass(frozen=True)
class LengthSpectrum:
    orbits: tuple[PeriodicOrbit, ...]
    horizon: float
    model_descriptor: str
    complete: bool
    oriented: bool
    _lengths: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        orbits = tuple(sorted(self.orbits, key=_sort_key))
        codes = {o.code for o in orbits}
        if len(codes) != len(orbits):
            raise ValueError("duplicate orbit codes in spectrum")
        object.__setattr__(self, "orbits", orbits)
        object.__setattr__(self, "_lengths", tuple(o.length for o in orbits))

    def __len__(self) -> int:
        return len(self.orbits)

    def __iter__(self):
        return iter(self.orbits)

    @property
    def lengths(self) -> tuple[float, ...]:
        return self._lengths

    def in_window(self, lo: float, hi: float) -> list[PeriodicOrbit]:
        """Orbits with ``lo <= length <= hi`` (closed window)."""
        import bisect

        i = bisect.bisect_left(self._lengths, lo)
        j = bisect.bisect_right(self._lengths, hi)
        return list(self.orbits[i:j])

    def truncate(self, horizon: float) -> "LengthSpectrum":
        return LengthSpectrum(
            orbits=tuple(o for o in self.orbits if o.length <= horizon),
            horizon=min(horizon, self.horizon),
            model_descriptor=self.model_descriptor,
            complete=self.complete,
            oriented=self.oriented,
        )

    def with_orbits(self, orbits: Iterable[PeriodicOrbit], **changes) -> "LengthSpectrum":
        return replace(self, orbits=tuple(orbits), **changes)


def descriptor_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]
