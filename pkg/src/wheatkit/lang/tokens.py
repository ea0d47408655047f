"""Lexer for the mini language."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from wheatkit.errors import LexError

__all__ = [
    "CONTENT_KINDS",
    "KEYWORDS",
    "Token",
    "TokenKind",
    "content_texts",
    "is_subsequence",
    "normalize",
    "tokenize",
]


class TokenKind(str, Enum):
    IDENTIFIER = "Identifier"
    KEYWORD = "Keyword"
    STRING = "StringLiteral"
    NUMBER = "NumberLiteral"
    PUNCT = "Punct"
    OPERATOR = "Operator"


KEYWORDS = frozenset(
    {
        "if", "else", "while", "for", "switch", "case", "default", "return",
        "break", "continue", "void", "int", "boolean", "char", "long",
        "double", "float", "byte", "short", "public", "private", "protected",
        "static", "final", "true", "false", "null", "this",
    }
)

# Longest operators first so that "<=" wins over "<".
_OPERATORS = (
    "++", "--", "+=", "-=", "*=", "/=", "%=", "==", "!=", "<=", ">=", "&&", "||",
    "=", "<", ">", "+", "-", "*", "/", "%", "!",
)
_PUNCT = "(){}[];,.:"

_SPACE = re.compile(r"\s+|//[^\n]*|/\*.*?\*/", re.S)
_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER = re.compile(r"\d+(?:\.\d+)?[lLfFdD]?")
_STRING = re.compile(r'"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\'')


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    position: int
    offset: int = 0

    @property
    def is_content(self) -> bool:
        """True for tokens that carry meaning on their own (not punctuation)."""
        return self.kind in CONTENT_KINDS


CONTENT_KINDS = frozenset(
    {TokenKind.IDENTIFIER, TokenKind.KEYWORD, TokenKind.STRING, TokenKind.NUMBER, TokenKind.OPERATOR}
)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        m = _SPACE.match(source, i)
        if m:
            i = m.end()
            continue
        ch = source[i]
        m = _IDENT.match(source, i)
        if m:
            text = m.group()
            kind = TokenKind.KEYWORD if text in KEYWORDS else TokenKind.IDENTIFIER
        elif ch in "0123456789":
            m = _NUMBER.match(source, i)
            text, kind = m.group(), TokenKind.NUMBER
        elif ch in "\"'":
            m = _STRING.match(source, i)
            if not m:
                raise LexError(f"unterminated literal at byte {_byte_offset(source, i)}", _byte_offset(source, i))
            text, kind = m.group(), TokenKind.STRING
        elif ch in _PUNCT:
            text, kind = ch, TokenKind.PUNCT
        else:
            text = next((op for op in _OPERATORS if source.startswith(op, i)), "")
            if not text:
                off = _byte_offset(source, i)
                raise LexError(f"unexpected character {ch!r} at byte {off}", off)
            kind = TokenKind.OPERATOR
        tokens.append(Token(kind, text, len(tokens), i))
        i += len(text)
    return tokens


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def normalize(source: str) -> str:
    """Token texts joined by single spaces; the whitespace-insensitive form."""
    return " ".join(t.text for t in tokenize(source))


def content_texts(tokens: list[Token]) -> list[str]:
    return [t.text for t in tokens if t.is_content]


def is_subsequence(candidate, whole, wildcard: str | None = None) -> bool:
    """Whether ``candidate`` texts appear in ``whole`` in order.

    Items may be tokens or plain strings. A candidate item equal to
    ``wildcard`` matches any identifier or literal in ``whole``.
    """
    it = iter(whole)
    for c in candidate:
        ctext = c.text if isinstance(c, Token) else c
        for w in it:
            wtext = w.text if isinstance(w, Token) else w
            if wtext == ctext:
                break
            if wildcard is not None and ctext == wildcard and _is_name_like(w):
                break
        else:
            return False
    return True


def _is_name_like(item) -> bool:
    if isinstance(item, Token):
        return item.kind in (TokenKind.IDENTIFIER, TokenKind.STRING, TokenKind.NUMBER) or item.text in (
            "true", "false", "null", "this",
        )
    return bool(item) and (item[0].isalnum() or item[0] in "_$\"'")
