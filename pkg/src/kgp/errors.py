"""Exception types."""


class KGPError(Exception):
    """Base class for library errors."""


class GroundingExplosion(KGPError):
    pass


class NotStratified(KGPError):
    def __init__(self, predicates):
        self.predicates = sorted(set(predicates))
        super().__init__("cycle through negation involving: " + ", ".join(self.predicates))


class Floundering(KGPError):
    """No literal of a body can be selected safely."""


class SearchBoundExceeded(KGPError):
    pass


class UnknownNode(KGPError):
    pass


class NotALeaf(KGPError):
    pass


class EmptyInput(KGPError):
    pass


class InconsistentObservation(KGPError):
    pass


class ValidationError(KGPError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class ScenarioError(KGPError):
    pass


class VerificationError(KGPError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None, column=None, expected=()):
        self.column = column
        self.expected = sorted(set(expected))
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        col = f", column {column}" if column is not None else ""
        KGPError.__init__(self, f"line {line}{col}: {message}{exp}")
        self.line = line
