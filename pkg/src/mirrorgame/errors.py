"""Exception types shared across the package."""


class MirrorGameError(Exception):
    """Base class for all package errors."""


class InvalidStateError(MirrorGameError):
    """A state, parameter, or signal contains NaN/Inf or violates an invariant."""


class DivergenceError(MirrorGameError):
    """Numerical integration produced a non-finite state.

    Carries the simulated time at which the state became non-finite and,
    when raised inside an iterative run, the iteration index.
    """

    def __init__(self, message, t=None, iteration=None):
        super().__init__(message)
        self.t = t
        self.iteration = iteration


class ConfigError(MirrorGameError):
    """Invalid configuration value or file."""


class AlignmentError(MirrorGameError):
    """Sequences that must share a grid have mismatched lengths or rates."""


class ParseError(MirrorGameError):
    """Malformed text input; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class FormatError(MirrorGameError):
    """Structurally valid input with inconsistent content (e.g. non-uniform time)."""


class InsufficientDataError(MirrorGameError):
    """An operation needs more samples than were provided."""


class DegenerateMotionError(MirrorGameError):
    """Phase extraction failed because the motion never crosses its center."""


class UndefinedBenchmarkError(MirrorGameError):
    """Error rate against a zero benchmark value is undefined."""


class SessionError(MirrorGameError):
    """Operation on a closed, faulted, or unknown session."""
