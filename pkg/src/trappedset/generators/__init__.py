"""Certified-complete length spectra for the cylinder, Schottky and three-disk models."""

from trappedset.generators.cylinder import CylinderConfig, enumerate_cylinder  # noqa: F401
from trappedset.generators.schottky import (  # noqa: F401
    SchottkyConfig,
    ValidationReport,
    default_schottky,
    enumerate_schottky,
    validate_schottky,
)
from trappedset.generators.three_disk import ThreeDiskConfig, enumerate_three_disk  # noqa: F401
