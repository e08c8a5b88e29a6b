"""Exception types shared across the package.

The CLI maps these onto exit codes (input 2, parameter/domain 3,
numerical invariant 4), so library code should raise the most specific
one that applies.
"""


class NpivError(Exception):
    """Base class for all package errors."""


class InputDataError(NpivError, ValueError):
    """Malformed or inconsistent input data (bad arrays, length mismatch)."""


class ParameterError(NpivError, ValueError):
    """A configuration parameter violates its precondition."""


class DomainError(ParameterError):
    """An evaluation point lies outside the domain of definition."""


class NumericalInvariantError(NpivError, RuntimeError):
    """An internal numerical invariant failed (e.g. a factorization that
    cannot fail for a positive ridge did fail anyway)."""
