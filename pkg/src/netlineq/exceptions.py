"""Exception hierarchy.

Every error derives from :class:`NetLineqError`; most also subclass the
builtin that best describes them so callers can catch ``ValueError`` etc.
"""


class NetLineqError(Exception):
    """Base class for all package errors."""


class InvalidInputError(NetLineqError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class ShapeError(NetLineqError, ValueError):
    pass


class SizeError(NetLineqError, ValueError):
    """A requested object would exceed the configured size cap."""


class InfeasibleSetError(NetLineqError, ValueError):
    """The affine set {y : Hy = z} is empty (within tolerance)."""


class PartitionError(NetLineqError, ValueError):
    pass


class ParseError(NetLineqError, ValueError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class DimensionError(NetLineqError, ValueError):
    pass


class UnsupportedProcessError(NetLineqError, TypeError):
    """The operation has no closed form for this graph process kind."""


class InvalidStepError(NetLineqError, ValueError):
    """Laplacian step h outside (0, 1/max-degree)."""


class StepOrderError(NetLineqError, ValueError):
    """Gradient step alpha(t) exceeded the consensus step h."""


class ParameterError(NetLineqError, ValueError):
    pass


class DegenerateRowError(NetLineqError, ValueError):
    """A zero row was met where a row-norm sampling law is required."""


class DomainError(NetLineqError, ValueError):
    """Non-positive data handed to a log-scale fit."""


class ConnectivityError(NetLineqError, ValueError):
    pass


class ConfigError(NetLineqError, ValueError):
    pass
