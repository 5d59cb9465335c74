import itertools
import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trappedset.orbits import (
    LengthSpectrum,
    Model,
    OrbitCode,
    amplitude,
    canonical_word,
    cyclic_reduce,
    expand_repetitions,
    invert_word,
    is_cyclically_reduced,
    least_rotation,
    primitive_root,
    surface_log_stability,
    surface_orbit,
)

words = st.lists(st.integers(0, 3), min_size=0, max_size=14).map(tuple)


def _brute_cyclic_reduce(w):
    # repeated cancellation of adjacent and wrap-around inverse pairs
    w = list(w)
    changed = True
    while changed:
        changed = False
        for i in range(len(w) - 1):
            if w[i] == w[i + 1] ^ 1:
                del w[i:i + 2]
                changed = True
                break
        if not changed and len(w) >= 2 and w[0] == w[-1] ^ 1:
            w = w[1:-1]
            changed = True
    return tuple(w)


@given(words)
def test_cyclic_reduce_matches_brute_force(w):
    assert len(cyclic_reduce(w)) == len(_brute_cyclic_reduce(w))
    r = cyclic_reduce(w)
    assert not r or is_cyclically_reduced(r)


@given(words, st.booleans())
def test_canonical_is_idempotent_and_class_invariant(w, oriented):
    c = canonical_word(w, oriented)
    assert canonical_word(c, oriented) == c
    r = cyclic_reduce(w)
    for i in range(len(r)):
        assert canonical_word(r[i:] + r[:i], oriented) == c
    if not oriented:
        assert canonical_word(invert_word(w), oriented) == c


def test_orientation_distinguishes_inverse():
    ab = (0, 2)
    assert canonical_word(ab, oriented=True) != canonical_word(invert_word(ab), oriented=True)
    assert canonical_word(ab) == canonical_word(invert_word(ab))


def test_least_rotation_small():
    assert least_rotation((2, 0, 1)) == (0, 1, 2)
    assert least_rotation(()) == ()


@given(st.lists(st.integers(0, 3), min_size=1, max_size=5).map(tuple), st.integers(1, 4))
def test_primitive_root_recovers_power(root, m):
    r, k = primitive_root(root)
    got_root, got_m = primitive_root(root * m)
    assert got_root == r
    assert got_m == k * m


def test_code_validation_and_parse():
    assert str(OrbitCode.parse("schottky", "aB")) == "aB"
    assert str(OrbitCode.parse(Model.THREE_DISK, "123")) == "123"
    with pytest.raises(ValueError):
        OrbitCode(Model.SCHOTTKY, (0, 1))
    with pytest.raises(ValueError):
        OrbitCode(Model.THREE_DISK, (1, 2, 1))
    with pytest.raises(ValueError):
        OrbitCode(Model.CYLINDER, (0, 1))


def test_surface_stability_closed_form():
    # |det(1 - P)| = (2 sinh(l/2))^2 for a hyperbolic surface geodesic
    for ell in (0.1, 2.0, 10.0, 50.0, 700.0):
        exact = float(2 * mpmath.log(2 * mpmath.sinh(mpmath.mpf(ell) / 2)))
        assert surface_log_stability(ell) == pytest.approx(exact, rel=1e-14, abs=1e-14)
    assert math.exp(surface_log_stability(2.0)) == pytest.approx(float((2 * mpmath.sinh(1)) ** 2), rel=1e-14)
    assert math.isfinite(surface_log_stability(5000.0))
    with pytest.raises(ValueError):
        surface_log_stability(0.0)


def test_amplitude_closed_form():
    # primitive length 2, tenth-length iterate: 2 / (2 sinh 5)
    o = surface_orbit(OrbitCode(Model.CYLINDER, (0,) * 5), 2.0, 5)
    exact = float(mpmath.mpf(2) / (2 * mpmath.sinh(5)))
    assert amplitude(o) == pytest.approx(exact, rel=1e-14)


def test_amplitude_large_length_is_finite():
    # the determinant overflows a float; the log-domain amplitude does not
    o = surface_orbit(OrbitCode(Model.CYLINDER, (0,)), 1500.0, 1)
    exact = mpmath.mpf(1500) / (2 * mpmath.sinh(750))
    assert amplitude(o) == pytest.approx(float(exact), rel=1e-12)


def test_expand_repetitions():
    base = surface_orbit(OrbitCode(Model.SCHOTTKY, (0,)), 2.0)
    reps = expand_repetitions(base, 7.0)
    assert [o.length for o in reps] == [2.0, 4.0, 6.0]
    assert [o.repetition for o in reps] == [1, 2, 3]
    assert str(reps[1].code) == "aa"


def test_spectrum_sorted_and_windowed():
    orbits = [surface_orbit(OrbitCode(Model.SCHOTTKY, (x,)), ell) for x, ell in ((2, 3.0), (0, 1.0))]
    spec = LengthSpectrum(tuple(orbits), 5.0, "t", True, False)
    assert spec.lengths == (1.0, 3.0)
    assert len(spec.in_window(1.0, 3.0)) == 2
    assert len(spec.truncate(2.0)) == 1
    with pytest.raises(ValueError):
        LengthSpectrum(tuple(orbits) * 2, 5.0, "t", True, False)


def test_canonical_exhaustive_length_six():
    seen = {}
    for n in range(1, 7):
        for w in itertools.product(range(4), repeat=n):
            c = canonical_word(w)
            if c not in seen:
                seen[c] = canonical_word(c) == c
    assert all(seen.values())
