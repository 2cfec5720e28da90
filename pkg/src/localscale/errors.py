"""Exception types raised across the package."""


class LocalScaleError(ValueError):
    """Base class; every error is also a ``ValueError``."""


class RepresentationMismatch(LocalScaleError):
    pass


class EmptySetError(LocalScaleError):
    pass


class DomainError(LocalScaleError):
    pass


class ResolutionError(LocalScaleError):
    pass


class PreconditionError(LocalScaleError):
    pass


class SingularityError(LocalScaleError):
    pass


class CapError(LocalScaleError):
    pass


class MapInvariantError(LocalScaleError):
    """A contraction map failed its construction-time certification."""


class BracketDegenerateError(LocalScaleError):
    pass
