import numpy as np
import pytest
from hypothesis import settings

from gnet.geometry import SpaceDescriptor

settings.register_profile("gnet", max_examples=40, deadline=None)
settings.load_profile("gnet")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def s2():
    return SpaceDescriptor.sphere(2)


@pytest.fixture
def circle_grid():
    th = np.arange(360) * (2 * np.pi / 360)
    return np.column_stack([np.cos(th), np.sin(th)])
