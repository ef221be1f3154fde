"""Exception types raised across the package."""


class Simplex2VecError(Exception):
    """Base class for all library errors."""


class DuplicateVertex(Simplex2VecError, ValueError):
    pass


class InvalidDimension(Simplex2VecError, ValueError):
    pass


class EmptyDimension(Simplex2VecError, ValueError):
    pass


class UnknownVertex(Simplex2VecError, KeyError):
    pass


class DegenerateCorpus(Simplex2VecError, ValueError):
    pass


class TooFewPoints(Simplex2VecError, ValueError):
    pass


class LengthMismatch(Simplex2VecError, ValueError):
    pass


class ConfigError(Simplex2VecError, ValueError):
    """Invalid run configuration (CLI exit code 1)."""


class StageError(Simplex2VecError):
    """A pipeline stage failed (CLI exit code 2).

    Wraps the underlying exception and records which stage raised it.
    """

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
