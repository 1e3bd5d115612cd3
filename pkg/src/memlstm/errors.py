"""Exception types raised across the simulator.

Every exception carries a short ``category`` string; the command line prints it
as the first token of its one-line error message so scripts can branch on it.
"""


class MemLSTMError(Exception):
    category = "error"


class DatasetError(MemLSTMError):
    category = "dataset"


class EmptySeries(DatasetError):
    category = "empty_series"


class ParseFailure(DatasetError):
    category = "parse_failure"

    def __init__(self, line: int, text: str = ""):
        self.line = line
        msg = f"line {line}: cannot parse {text!r} as a number" if text else f"line {line}"
        super().__init__(msg)


class ConstantSeries(DatasetError):
    category = "constant_series"


class TooShort(DatasetError):
    category = "too_short"


class SplitError(DatasetError):
    category = "split"


class NonFiniteError(MemLSTMError):
    category = "non_finite"


class DivergenceError(MemLSTMError):
    category = "divergence"


class SchemaError(MemLSTMError):
    category = "schema"


class MissingField(SchemaError):
    category = "missing_field"

    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing field {field!r}")


class OutOfRange(SchemaError):
    category = "out_of_range"


class LengthMismatch(MemLSTMError):
    category = "length_mismatch"


class ConfigError(MemLSTMError):
    category = "config"
