"""Exception hierarchy shared by every module of the package."""


class EigenDetectError(Exception):
    """Base class for all errors raised by eigendetect."""


class DomainError(EigenDetectError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class DegenerateSpectrumError(EigenDetectError, ArithmeticError):
    """A test statistic is undefined because an eigenvalue (or the noise estimate) is zero."""


class InvariantViolation(EigenDetectError, ArithmeticError):
    """A matrix failed a structural check (Hermitian, positive semidefinite)."""


class NumericError(EigenDetectError, ArithmeticError):
    """The eigensolver did not converge."""


class ConfigurationError(EigenDetectError):
    """Missing tables, calibration entries, or incompatible policy settings."""


class UnsupportedError(EigenDetectError, NotImplementedError):
    """The requested combination has no implementation (e.g. analytic GLRT threshold)."""


class SnapshotFormatError(EigenDetectError, ValueError):
    """A snapshot file is truncated or does not carry the expected magic bytes."""


class CampaignError(EigenDetectError):
    """A Monte Carlo campaign could not produce a single usable trial."""
