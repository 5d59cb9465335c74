"""Numerical laboratory for periodic orbits, topological pressure and
resonance counting on model hyperbolic trapped sets."""

__version__ = "0.1.0"

from trappedset.orbits import (  # noqa: F401
    LengthSpectrum,
    Model,
    OrbitCode,
    PeriodicOrbit,
    amplitude,
    expand_repetitions,
    surface_stability_from_length,
)
