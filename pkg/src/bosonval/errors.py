"""Exception hierarchy shared by every module."""


class BosonValError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(BosonValError, ValueError):
    pass


class UnitarityError(BosonValError, ValueError):
    pass


class ModeConfigError(BosonValError, ValueError):
    pass


class ConvergenceError(BosonValError, ArithmeticError):
    pass


class DegenerateDistributionError(BosonValError, ArithmeticError):
    pass


class SupportError(BosonValError, ValueError):
    """An observed event is impossible under a model, or supports differ."""


class ConfigError(BosonValError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class FormatError(BosonValError, ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
