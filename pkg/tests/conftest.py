import pytest
from hypothesis import settings

from trappedset.generators import CylinderConfig, ThreeDiskConfig, enumerate_cylinder, enumerate_three_disk
from trappedset.generators.schottky import default_schottky, enumerate_schottky

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def schottky_config():
    return default_schottky()


@pytest.fixture(scope="session")
def schottky12(schottky_config):
    return enumerate_schottky(schottky_config, 12.0)


@pytest.fixture(scope="session")
def schottky20(schottky_config):
    return enumerate_schottky(schottky_config, 20.0)


@pytest.fixture(scope="session")
def cylinder30():
    return enumerate_cylinder(CylinderConfig(2.0), 30.0)


@pytest.fixture(scope="session")
def cylinder30_oriented():
    return enumerate_cylinder(CylinderConfig(2.0), 30.0, oriented=True)


@pytest.fixture(scope="session")
def disk_config():
    return ThreeDiskConfig(6.0, 1.0)


@pytest.fixture(scope="session")
def three_disk24(disk_config):
    return enumerate_three_disk(disk_config, 24.0, 6)
