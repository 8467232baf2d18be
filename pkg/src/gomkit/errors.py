"""Exception hierarchy shared by every gomkit module."""


class GomkitError(Exception):
    """Base class for all typed gomkit errors."""


# bvh
class BvhSyntaxError(GomkitError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructureError(GomkitError, ValueError):
    pass


class EmptyMotionError(GomkitError, ValueError):
    pass


class BindingError(GomkitError, ValueError):
    pass


class UnknownDescriptorError(GomkitError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


# preprocess
class TooShortError(GomkitError, ValueError):
    pass


class SpecError(GomkitError, ValueError):
    pass


class RangeError(GomkitError, ValueError):
    pass


class BoundsError(GomkitError, ValueError):
    pass


class OverlapError(GomkitError, ValueError):
    pass


# similarity / shared shape checks
class DimensionError(GomkitError, ValueError):
    pass


class EmptyError(GomkitError, ValueError):
    pass


# gom
class UnknownSensorError(GomkitError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ChainError(GomkitError, ValueError):
    pass


class SingularError(GomkitError, ValueError):
    """Raised when one or more equations cannot be identified.

    ``descriptors`` lists the failing descriptors; ``partial`` holds the
    models that did fit, keyed by descriptor.
    """

    def __init__(self, message, descriptors=(), partial=None):
        super().__init__(message)
        self.descriptors = tuple(descriptors)
        self.partial = dict(partial or {})


class LengthError(GomkitError, ValueError):
    pass


class DivergenceError(GomkitError, FloatingPointError):
    pass


class TooLongError(GomkitError, ValueError):
    pass


# metrics
class LengthMismatchError(GomkitError, ValueError):
    pass


class DegenerateError(GomkitError, ZeroDivisionError):
    pass


class RepetitionError(GomkitError):
    """Wraps an error raised while evaluating one repetition."""

    def __init__(self, repetition, cause):
        self.repetition = repetition
        self.cause = cause
        super().__init__(f"repetition {repetition!r}: {type(cause).__name__}: {cause}")


# dexterity (RangeError reused for k out of range)

# recognition
class DegenerateDataError(GomkitError, ValueError):
    pass


class EmptyModelSetError(GomkitError, ValueError):
    pass


class InsufficientDataError(GomkitError, ValueError):
    pass


# cli / datasets
class NetworkError(GomkitError, OSError):
    pass


class ChecksumError(GomkitError, OSError):
    pass


class ConfigError(GomkitError, ValueError):
    pass


class MissingArtifactError(GomkitError, FileNotFoundError):
    pass
