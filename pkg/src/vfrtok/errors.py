"""Exception hierarchy.

Every validation failure derives from :class:`VfrError` (a ``ValueError``),
so callers can catch one type. :class:`FormatError` is kept separate because
the CLI maps it to its own exit code.
"""


class VfrError(ValueError):
    pass


class InvalidBoundaries(VfrError):
    pass


class InvalidDurations(VfrError):
    pass


class InvalidRateInputs(VfrError):
    pass


class InvalidTargets(VfrError):
    pass


class InvalidInput(VfrError):
    pass


class InvalidConfig(VfrError):
    pass


class InvalidAlignment(VfrError):
    pass


class InvalidToken(VfrError):
    pass


class BudgetInfeasible(VfrError):
    pass


class FitDiverged(VfrError):
    pass


class DegenerateInput(VfrError):
    pass


class DegenerateCode(VfrError):
    pass


class TooLarge(VfrError):
    pass


class NoCandidate(VfrError):
    pass


class ModeMismatch(VfrError):
    pass


class FormatError(Exception):
    """Malformed binary or text file. ``offset`` is the byte (or line) position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset
