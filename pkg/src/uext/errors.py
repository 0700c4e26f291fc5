"""Exception types shared across the package."""


class InputError(ValueError):
    """An argument refers to something that does not exist or is malformed."""


class ParseError(ValueError):
    """Syntax error in one of the text formats (.frame, .abp, formulas)."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = []
        if line is not None:
            where.append(f"line {line}")
        if col is not None:
            where.append(f"col {col}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.message = message


class CapExceeded(RuntimeError):
    """An exhaustive computation would exceed its configured size cap."""
