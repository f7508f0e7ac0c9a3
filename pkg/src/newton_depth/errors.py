"""Exception types shared across the package."""


class NewtonDepthError(Exception):
    """Base class for all package errors."""


class CapsExceeded(NewtonDepthError):
    """A polytope grew past the configured dimension or vertex caps."""


class NotAffineProduct(NewtonDepthError, ValueError):
    """dim(P + Q) != dim(P) + dim(Q)."""


class NotJoin(NewtonDepthError, ValueError):
    """dim(conv(P u Q)) != dim(P) + dim(Q) + 1."""


class GenericityFailure(NewtonDepthError):
    """No generic lift was found within the retry budget."""


class SchemaError(NewtonDepthError, ValueError):
    """Malformed JSON input, including networks that carry biases."""


class PreconditionError(NewtonDepthError, ValueError):
    """An operation was called on inputs outside its contract."""
