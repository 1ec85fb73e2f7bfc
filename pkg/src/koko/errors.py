"""Exception hierarchy shared across the engine.

Exit-code mapping used by the CLI: input-format problems (corpus or index
files) are ``KokoInputError`` (exit 2); query-side problems (syntax,
normalization, unknown labels, missing resources) are ``KokoQueryError``
(exit 3).
"""


class KokoError(Exception):
    pass


class KokoInputError(KokoError):
    """Malformed corpus file, index file, or version/fingerprint mismatch."""


class KokoQueryError(KokoError):
    """Problem with the query itself or resources it needs."""


class KokoSyntaxError(KokoQueryError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class KokoNormalizeError(KokoQueryError):
    pass


class KokoDecomposeError(KokoQueryError):
    pass


class KokoResourceError(KokoQueryError):
    pass
