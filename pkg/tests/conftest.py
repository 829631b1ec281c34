from pathlib import Path

import numpy as np
import pytest

from algc.fields import Polynomial, monomials
from algc.verify import fixture_path, fixture_registry

DATA = Path(__file__).parent / "data"


def random_field(rng, n, shape, degree=2):
    return Polynomial(n, rng.uniform(-1, 1, tuple(shape) + (len(monomials(n, degree)),)), degree)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def registry():
    return {fx.name: fx for fx in fixture_registry()}


@pytest.fixture(scope="session")
def euclid2(registry):
    return registry["euclid2"]


@pytest.fixture(scope="session")
def hyperbolic(registry):
    return registry["hyperbolic"]


@pytest.fixture(scope="session")
def so3(registry):
    return registry["so3"]


@pytest.fixture(scope="session")
def kahler_flat(registry):
    return registry["kahler_flat"]


@pytest.fixture(scope="session")
def twisted_j(registry):
    return registry["twisted_j"]


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def bundled():
    return {name: fixture_path(name) for name in
            ("euclid2", "hyperbolic", "so3", "kahler_flat", "twisted_j", "tmj_twisted_j")}
