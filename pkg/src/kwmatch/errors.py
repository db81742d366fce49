"""Exception types raised across the package."""


class KwMatchError(Exception):
    """Base class for all package errors."""


class EmptyQuestion(KwMatchError, ValueError):
    pass


class EmptyCorpus(KwMatchError, ValueError):
    pass


class EmptyDataset(KwMatchError, ValueError):
    pass


class ShapeError(KwMatchError, ValueError):
    pass


class ConfigError(KwMatchError, ValueError):
    pass


class NoTraceError(KwMatchError, RuntimeError):
    pass


class NoComparablePairs(KwMatchError, ValueError):
    pass


class LabelError(KwMatchError, ValueError):
    pass


class UndefinedAUC(KwMatchError, ValueError):
    pass


class DimensionMismatch(KwMatchError, ValueError):
    pass


class ParseError(KwMatchError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class IncompatibleCheckpoint(KwMatchError, ValueError):
    pass


class CorruptCheckpoint(KwMatchError, ValueError):
    pass
