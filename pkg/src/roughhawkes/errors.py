"""Exception hierarchy shared by every module of the package."""


class RoughHawkesError(Exception):
    """Base class for all package errors."""


class DomainError(RoughHawkesError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class AccuracyError(RoughHawkesError, ArithmeticError):
    """A numerical method could not reach the requested accuracy."""


class ResourceError(RoughHawkesError, RuntimeError):
    """A configured resource cap (e.g. the event cap) was exceeded."""


class ConsistencyError(RoughHawkesError, ValueError):
    """Two inputs that must describe the same regime disagree."""


class DegenerateError(RoughHawkesError, ValueError):
    """An estimator received input that carries no information."""


class ConfigError(RoughHawkesError, ValueError):
    """An experiment configuration is invalid."""


class MissingDataError(RoughHawkesError, FileNotFoundError):
    """Expected artifacts are missing from an output directory."""


class CriterionFailure(RoughHawkesError):
    """One or more acceptance criteria failed; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
