"""Exception hierarchy shared by all OECS modules.

Every error carries an ``exit_code`` used by the command-line front end:
2 for configuration problems, 3 for data problems and 4 for numerical
failures.
"""


class OecsError(Exception):
    exit_code = 4


class ConfigError(OecsError):
    exit_code = 2


class DataError(OecsError):
    exit_code = 3


class OutOfDomain(DataError, ValueError):
    """A point or time lies outside the data domain of a field."""


class LeftDomain(OutOfDomain):
    """A particle trajectory left the field domain during advection."""

    def __init__(self, message, exit_time=None):
        super().__init__(message)
        self.exit_time = exit_time


class EquatorBand(DataError):
    pass


class UnknownFlow(ConfigError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ZeroTangent(OecsError, ValueError):
    pass


class Degenerate(OecsError):
    """Repeated rate-of-strain eigenvalues; eigenvectors are undefined."""


class OutsideUmu(OecsError):
    """The stretching rate ``mu`` is not between the eigenvalues."""


class AmbiguousWinding(OecsError):
    pass


class ImmediateDegeneracy(OecsError):
    pass


class NoReturn(OecsError):
    """A section trajectory stopped before returning to the section."""

    def __init__(self, message, stop_reason=None):
        super().__init__(message)
        self.stop_reason = stop_reason


class SectionBlocked(OecsError):
    pass


class IntersectionAnomaly(OecsError):
    pass


class DegenerateCore(OecsError):
    pass


class LinearizationDegenerate(OecsError):
    pass


class NoConnection(OecsError):
    pass


class SingularGradient(OecsError):
    pass
