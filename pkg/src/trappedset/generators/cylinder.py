"""Hyperbolic cylinder: one primitive closed geodesic of length ``core_length``."""
from __future__ import annotations

from dataclasses import dataclass

from trappedset.errors import ConfigurationError
from trappedset.orbits import LengthSpectrum, Model, OrbitCode, descriptor_hash, surface_orbit


@dataclass(frozen=True)
class CylinderConfig:
    core_length: float

    def __post_init__(self):
        if not self.core_length > 0:
            raise ConfigurationError(f"core_length must be > 0, got {self.core_length}")

    def descriptor(self) -> str:
        return descriptor_hash(f"cylinder:{self.core_length!r}")


def enumerate_cylinder(config: CylinderConfig, horizon: float, oriented: bool = False) -> LengthSpectrum:
    orbits = []
    ell0 = config.core_length
    m = 1
    while m * ell0 <= horizon:
        for letter in ((0, 1) if oriented else (0,)):
            orbits.append(surface_orbit(OrbitCode(Model.CYLINDER, (letter,) * m), ell0, m))
        m += 1
    return LengthSpectrum(
        orbits=tuple(orbits),
        horizon=horizon,
        model_descriptor=config.descriptor(),
        complete=True,
        oriented=oriented,
    )
