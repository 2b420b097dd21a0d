"""Exception types raised across the package."""


class ReltimeError(Exception):
    """Base class for all errors raised by reltime."""


class DegenerateSliders(ReltimeError, ValueError):
    """All four slider values coincide, so the pair cannot be normalized."""


class DomainError(ReltimeError, ValueError):
    """An argument lies outside the domain of a function."""


class DegenerateInput(ReltimeError, ValueError):
    """Input to a correlation is too short or constant."""


class MalformedAssignment(ReltimeError, ValueError):
    """An assignment does not hold exactly five annotations."""


class SchemaError(ReltimeError, ValueError):
    """A serialized record violates its schema.

    ``line`` is 1-based (``None`` when the record did not come from a file)
    and ``field`` names the offending key.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class NoPredicates(ReltimeError, ValueError):
    """A sentence has no predicates."""


class NotConnected(ReltimeError, ValueError):
    """The pair-observation graph leaves the timeline underdetermined."""


class KinkNearby(ReltimeError, ValueError):
    """A gradient check point lies too close to a non-differentiable point."""


class SingularCovariance(ReltimeError, ArithmeticError):
    """A covariance matrix cannot be whitened even after ridge regularization."""


class NoConvergence(RuntimeWarning):
    """An iterative solver hit its iteration budget before converging.

    Emitted as a warning; the caller still gets the last iterate.
    """
