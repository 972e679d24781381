"""Exception types shared across the library."""


class SftError(Exception):
    """Base class for library errors."""


class SingularityError(SftError, ValueError):
    """Evaluation requested at a singular point (source position, x = 0, ...)."""


class AliasingError(SftError, ValueError):
    """Requested harmonic order exceeds what a quadrature grid supports."""


class UnsupportedGridError(SftError, ValueError):
    """No bundled node set with the requested point count."""


class ValidationError(SftError, ValueError):
    """A scene or parameter file violates an invariant; message names the field."""


class ModelError(SftError, ValueError):
    """Operation applied to a driving function of the wrong source model."""


class ConvergenceError(SftError, RuntimeError):
    """Iterative solver failed to converge and the caller did not allow that."""
