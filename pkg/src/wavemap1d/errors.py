"""Exception taxonomy.

Every error class carries a distinct CLI exit code so batch runs can be
triaged from the shell.
"""

from __future__ import annotations


class WaveMapError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(WaveMapError):
    exit_code = 2


class DistanceExceeded(WaveMapError):
    """Point is outside the tubular neighborhood of the target manifold."""

    exit_code = 3


class OutsideDomain(WaveMapError):
    exit_code = 4


class CausalityViolated(WaveMapError):
    """Null coordinates with a < b do not correspond to t >= 0."""

    exit_code = 5


class DeltaTooLarge(WaveMapError):
    exit_code = 6


class RegionMismatch(WaveMapError):
    exit_code = 7


class LatticeMismatch(WaveMapError):
    exit_code = 8


class DataCoverage(WaveMapError):
    """Data does not cover the dependence region of a requested site."""

    exit_code = 9


class OffLattice(WaveMapError):
    exit_code = 10


class TestFunctionSupport(WaveMapError):
    exit_code = 11
    __test__ = False    # not a pytest class despite the name


class SmallnessViolated(WaveMapError):
    exit_code = 12


class NoConvergence(WaveMapError):
    exit_code = 13


class DegenerateHeight(WaveMapError):
    """Selected local height is below the lattice resolution floor."""

    exit_code = 14


class StallDetected(WaveMapError):
    """Continuation height hit the discretization floor; carries diagnostics."""

    exit_code = 15

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OverlapMismatch(WaveMapError):
    """Overlapping tile solves disagree; indicates a causality bug."""

    exit_code = 16


class TailNotSmall(WaveMapError):
    exit_code = 17


class TailMass(WaveMapError):
    exit_code = 18


class BudgetInfeasible(WaveMapError):
    exit_code = 19


class MissingProvenance(WaveMapError):
    exit_code = 20


class CompatibilityError(WaveMapError):
    exit_code = 21
