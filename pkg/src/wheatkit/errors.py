"""Exception types shared across the package."""

from __future__ import annotations


class WheatError(Exception):
    """Base class for every error raised by this package."""


class LexError(WheatError):
    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class ParseError(WheatError):
    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset()):
        super().__init__(message)
        self.position = position
        self.expected = expected


class SubtreeNotFound(WheatError):
    def __init__(self, statement: str):
        super().__init__(f"fragment statement not found in program: {statement}")
        self.statement = statement


class ParseFailed(WheatError):
    """A model was handed a program it could not parse."""


class ProtocolError(WheatError):
    """The external model misbehaved: bad reply, crash or timeout."""


class ConstituentViolation(WheatError):
    """A candidate's tokens are not a subsequence of the original's."""


class FragmentSearchExhausted(WheatError):
    def __init__(self, max_k: int):
        super().__init__(f"no fragment of size <= {max_k} is sufficient and necessary")
        self.max_k = max_k


class FixpointCapExceeded(WheatError):
    def __init__(self, cap: int, last_tree):
        super().__init__(f"mutation did not converge within {cap} passes")
        self.cap = cap
        self.last_tree = last_tree


class TokenLimitExceeded(WheatError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"program has {count} tokens, oracle limit is {limit}")
        self.count = count
        self.limit = limit


class NoProbabilities(WheatError):
    """The model does not report class probabilities."""


class NoCandidates(WheatError):
    def __init__(self, label: str):
        super().__init__(f"no corpus entries carry label {label!r}")
        self.label = label
