"""Exception hierarchy. Each family maps onto a CLI exit code."""


class SwmldaError(Exception):
    exit_code = 1


class ConfigError(SwmldaError, ValueError):
    exit_code = 2


class DataError(SwmldaError, ValueError):
    exit_code = 3


class FormatError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DimensionError(DataError):
    pass


class EmptyClassError(DataError):
    pass


class UndefinedMetricError(DataError):
    pass


class NumericError(SwmldaError, ArithmeticError):
    exit_code = 4


class DegenerateWeightsError(NumericError):
    pass


class DegenerateProjectionError(NumericError):
    pass
