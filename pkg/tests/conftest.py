import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from arwaves import lattice, surface


@pytest.fixture(scope="session")
def sphere24():
    return surface.builtin("sphere", 0.24)


@pytest.fixture(scope="session")
def hemisphere24():
    return surface.builtin("hemisphere", 0.24)


@pytest.fixture(scope="session")
def cap24():
    import math
    return surface.builtin("cap", 0.24, angle=math.pi / 3)


@pytest.fixture(scope="session")
def freq2():
    return lattice.enumerate_frequencies(2)


@pytest.fixture(scope="session")
def freq26():
    return lattice.enumerate_frequencies(26)
