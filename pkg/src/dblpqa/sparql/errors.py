"""Errors raised by the query tokenizer, parser, and validators."""


class SparqlError(ValueError):
    """Base class for all tokenizer/parser failures."""


class TokenizeError(SparqlError):
    """A character-level failure; carries the offset of the offending character."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnterminatedBracket(TokenizeError):
    pass


class UnterminatedString(TokenizeError):
    pass


class IllegalCharacter(TokenizeError):
    pass


class UnsupportedConstruct(SparqlError):
    """A recognizable SPARQL feature that lies outside the supported subset."""

    def __init__(self, construct: str, position: int | None = None):
        at = f" (at offset {position})" if position is not None else ""
        super().__init__(f"unsupported construct: {construct}{at}")
        self.construct = construct
        self.position = position


class QuerySyntaxError(SparqlError):
    """Malformed input; carries the offending token and the expected-token set."""

    def __init__(self, message: str, token=None, expected: tuple[str, ...] = ()):
        detail = message
        if token is not None:
            detail += f" at {token.kind} token {token.text!r} (offset {token.position})"
        if expected:
            detail += "; expected one of: " + ", ".join(expected)
        super().__init__(detail)
        self.token = token
        self.expected = tuple(expected)


class EmptyRelationSet(SparqlError):
    pass
