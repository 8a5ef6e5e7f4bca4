"""Exception types raised across the package."""


class LocalShareError(Exception):
    """Base class for all package errors."""


# ingest
class MissingColumn(LocalShareError):
    pass


class MalformedRow(LocalShareError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyFile(LocalShareError):
    pass


# shares
class MissingValues(LocalShareError):
    pass


class SelectionEmpty(LocalShareError):
    pass


# distance
class WindowTooNarrow(LocalShareError):
    pass


class DegenerateMatrix(LocalShareError):
    pass


class ZeroNorm(LocalShareError):
    pass


# cluster
class NotNormalized(LocalShareError):
    pass


class TargetTooLarge(LocalShareError):
    pass


# validate
class SingleCluster(LocalShareError):
    pass


class CoincidentCentroids(LocalShareError):
    pass


class ZeroDiameter(LocalShareError):
    pass


class ZeroWithinScatter(LocalShareError):
    pass


# pipeline
class MissingRawSeries(LocalShareError):
    pass


class ConfigError(LocalShareError):
    pass


class StageError(LocalShareError):
    """Wraps an error raised inside a pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
