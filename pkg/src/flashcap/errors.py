"""Exception types shared across the toolkit."""


class FlashcapError(Exception):
    """Base class for all toolkit errors."""


class OutOfRange(FlashcapError):
    """A variance parameter violates its admissible range."""


class BadInterval(FlashcapError):
    """The uniform-noise interval is not of the form 0 < alpha1 < alpha2."""


class BadAlphabet(FlashcapError):
    """The input level set is empty, non-increasing, or non-finite."""


class NoValidBeta(FlashcapError):
    """No grid point in (2, 3) yields a contraction factor rho < 1."""


class QuadratureUnderflow(FlashcapError):
    """A density value underflowed the log-representable range.

    Raised loudly instead of silently returning zero; ``step`` is the index
    of the offending factor when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class StateSpaceTooLarge(FlashcapError):
    """The forward-recursion state space exceeds the configured cap."""


class GridTooCoarse(FlashcapError):
    """Certified quadrature error exceeds the budget for a bound check."""


class ParseError(FlashcapError):
    """A configuration file failed to parse."""


class UnknownKey(FlashcapError):
    """A configuration file contains an unrecognized key."""


class ValidationError(FlashcapError):
    """A configuration value failed validation."""


class MissingManifest(FlashcapError):
    """An artifact directory does not contain a run manifest."""
