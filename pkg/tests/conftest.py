import pathlib
from fractions import Fraction

import pytest

from xorcast.placement import LibraryConfig, build_placement

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def example1_placement():
    return build_placement(LibraryConfig.fit(7, 7, 2, Fraction(12, 7)))


@pytest.fixture(scope="session")
def example2_placement():
    return build_placement(LibraryConfig(K=7, N=7, t=2, M=Fraction(10, 7), N_h=4, N_r=1))


@pytest.fixture(scope="session")
def mixed_placement():
    # files 1-3 high, 4-6 low, 7 uncached: every demand class reachable
    return build_placement(LibraryConfig(K=7, N=7, t=2, M=Fraction(9, 7), N_h=3, N_r=1))
