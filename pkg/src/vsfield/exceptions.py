"""Exception hierarchy shared across the package."""


class VSFieldError(Exception):
    """Base class for all errors raised by :mod:`vsfield`."""


class InvalidFieldError(VSFieldError, ValueError):
    """Field values or dimensions violate the container invariants."""


class DegenerateFieldError(VSFieldError, ValueError):
    """The long-run variance estimate is zero (or not positive), so M_n is undefined."""


class LagOutOfRangeError(VSFieldError, ValueError):
    pass


class FieldFormatError(VSFieldError, ValueError):
    """Base class for malformed field or table files."""


class HeaderError(FieldFormatError):
    pass


class DimensionMismatchError(FieldFormatError):
    pass


class CellParseError(FieldFormatError):
    """A value cell could not be parsed as a float."""

    def __init__(self, row: int, column: int, token: str):
        self.row = row
        self.column = column
        self.token = token
        super().__init__(f"cannot parse {token!r} as a number at row {row}, column {column}")


class ModelSpecError(VSFieldError, ValueError):
    """A model description string or parameter set is invalid."""


class NullTableError(VSFieldError, ValueError):
    """Missing null table or one that does not match the field dimension."""


class ConfigError(VSFieldError, ValueError):
    pass
