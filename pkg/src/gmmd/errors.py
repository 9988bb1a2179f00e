"""Exception types raised by the library and mapped to CLI exit codes."""

from __future__ import annotations


class GMMDError(Exception):
    """Base class for all library errors."""


class InputError(GMMDError, ValueError):
    """Invalid user-supplied data or parameters."""


class DegenerateVarianceError(GMMDError, ArithmeticError):
    """The estimated null variance is zero, so the statistic cannot be standardized."""


class UnsupportedOracleError(GMMDError, NotImplementedError):
    """A closed-form population quantity was requested for a distribution without one."""
