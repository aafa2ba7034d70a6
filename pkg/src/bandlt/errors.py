"""Exception hierarchy shared by all bandlt modules.

The CLI maps these onto process exit codes: validation/precondition
problems exit 2, physical-hypothesis violations exit 3, numerical
failures exit 4.
"""

from __future__ import annotations


class BandLTError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BandLTError):
    """Input data violates a structural invariant (ordering, shape, range)."""


class ConfigError(ValidationError):
    """Experiment configuration is malformed; message carries the field path."""


class PreconditionError(BandLTError):
    """Operation called outside its admissible parameter region."""


class PoleError(PreconditionError):
    """Evaluation requested exactly at the pole of a fractional linear map."""


class ValidityCapError(PreconditionError):
    """Distance query beyond the truncation-exact region of a band set.

    Carries ``cap``, the largest real part for which the truncated set
    answers exactly.
    """

    def __init__(self, message: str, cap: float):
        super().__init__(message)
        self.cap = cap


class HypothesisViolationError(BandLTError):
    """Data contradicts a standing hypothesis (V0 >= 0, Re V >= 0, ...)."""


class NumericalError(BandLTError):
    """A numerical procedure failed (non-convergence, singular solve, ...)."""


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4


def exit_code_for(exc: BaseException) -> int:
    """Exit code the CLI uses for a given exception."""
    if isinstance(exc, HypothesisViolationError):
        return EXIT_HYPOTHESIS
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, (ValidationError, PreconditionError)):
        return EXIT_CONFIG
    return EXIT_NUMERICAL
