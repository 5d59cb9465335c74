"""Shared builders for synthetic test spectra."""
from trappedset.orbits import LengthSpectrum, Model, OrbitCode, surface_orbit


def _code(i):
    # binary digits of i + 1 over the letters A, B: distinct and cyclically reduced
    return OrbitCode(Model.SCHOTTKY, tuple(2 * int(b) for b in bin(i + 1)[2:]))


def synthetic_spectrum(lengths, horizon=None):
    """Surface-type spectrum with arbitrary lengths and distinct dummy codes."""
    lengths = sorted(float(x) for x in lengths)
    orbits = tuple(surface_orbit(_code(i), ell) for i, ell in enumerate(lengths))
    if horizon is None:
        horizon = lengths[-1] if lengths else 1.0
    return LengthSpectrum(orbits, horizon, "synthetic", True, False)
