"""Front-end and engine error types."""


class LexError(Exception):
    def __init__(self, line, message):
        super().__init__("line %d: %s" % (line, message))
        self.line = line
        self.message = message


class ParseError(Exception):
    def __init__(self, line, message):
        super().__init__("line %d: %s" % (line, message))
        self.line = line
        self.message = message


class CheckError:
    """Static check failure, returned as data."""

    def __init__(self, line, message):
        self.line = line
        self.message = message

    def __repr__(self):
        return "CheckError(line %d: %s)" % (self.line, self.message)

    def __str__(self):
        return "line %d: %s" % (self.line, self.message)


class HostError(Exception):
    """Malformed module or other host-level misuse; never a guest fault."""
