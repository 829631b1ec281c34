"""Numerical calculus on skew-symmetric algebroids given by local structure data."""

from .algebroid import Algebroid, Box, bracket
from .calculus import Connection, SymBracket
from .errors import AlgcError
from .hermitian import AlmostComplex
from .metric import Metric
from .specfile import AlgebroidSpec, Fixture, load, load_fixture
from .verify import fixture_registry, run_suite

__all__ = [
    "AlgcError",
    "Algebroid",
    "AlgebroidSpec",
    "AlmostComplex",
    "Box",
    "Connection",
    "Fixture",
    "Metric",
    "SymBracket",
    "bracket",
    "fixture_registry",
    "load",
    "load_fixture",
    "run_suite",
]
