"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid caller input: bad box, non-monotone frame, malformed config."""


class FormatError(InputError):
    """A data file violates its on-disk format."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
