"""Exception hierarchy shared by all modules."""


class GappyError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GappyError, ValueError):
    """Invalid parameters or configuration (maps to CLI exit code 2)."""


class WindowTooLong(ConfigError):
    pass


class InvalidFraction(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class TooFewSamples(GappyError):
    pass


class SingularNormalMatrix(GappyError):
    pass


class AllFrequenciesSingular(GappyError):
    pass


class EmptyBand(GappyError):
    pass


class NonPositivePower(GappyError):
    pass


class NonFiniteLoss(GappyError):
    def __init__(self, epoch, stage="training"):
        super().__init__(f"non-finite loss during {stage} at epoch {epoch}")
        self.epoch = epoch
        self.stage = stage


class SingleClassData(ConfigError):
    pass


class EmptyInput(GappyError):
    pass


class TrialWithNoValidWindows(GappyError):
    pass


class MissingCounterpart(GappyError):
    pass


class ParseError(GappyError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(GappyError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing columns: " + ", ".join(self.missing))
