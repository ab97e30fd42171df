"""Exception hierarchy shared by every fdmi module."""


class FDMIError(Exception):
    """Base class for all errors raised by fdmi."""


class ValidationError(FDMIError, ValueError):
    """An input violates a documented precondition or invariant."""


class PlanningError(FDMIError):
    """No sideband layout satisfies the request.

    ``max_radius`` carries the largest band radius for which packing the
    requested number of sidebands succeeds (``None`` if none does).
    """

    def __init__(self, message, max_radius=None):
        super().__init__(message)
        self.max_radius = max_radius


class UnresolvableError(FDMIError):
    """A resolution chart never reaches the requested contrast."""


class ParseError(FDMIError, ValueError):
    """A file could not be decoded. ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class MalformedHeaderError(ParseError):
    pass


class TruncatedPayloadError(ParseError):
    pass


class UnsupportedMagicError(ParseError):
    pass
