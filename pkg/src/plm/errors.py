"""Exception hierarchy shared across the package."""


class PLMError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PLMError, ValueError):
    """Argument has the wrong shape, range or content."""


class InvalidOperationError(PLMError):
    """Structural edit that cannot be applied to the given network."""


class InvalidStateError(PLMError):
    """A precondition on the network/batch state does not hold."""


class DegenerateInstanceError(PLMError):
    """Two instances share an input vector and cannot be separated.

    ``pair`` holds the two offending dataset indices.
    """

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class SamplingFailureError(PLMError):
    """Random search for cramming parameters ran out of attempts."""


class ParseError(PLMError, ValueError):
    """Malformed input file; the message cites the location."""


class InsufficientHistoryError(PLMError, ValueError):
    """Time series is too short to build lagged features."""
