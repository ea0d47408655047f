"""The Program value: source text, its tokens and its tree, kept in sync."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from wheatkit.lang.printer import Unit, print_tree, serialize
from wheatkit.lang.syntax import Node, parse_tokens
from wheatkit.lang.tokens import Token, tokenize

__all__ = ["Program"]


@dataclass(frozen=True)
class Program:
    source: str
    tokens: tuple[Token, ...] = field(repr=False)
    ast: Node = field(repr=False)

    @classmethod
    def parse(cls, source: str) -> "Program":
        tokens = tuple(tokenize(source))
        return cls(source, tokens, parse_tokens(list(tokens)))

    @classmethod
    def from_ast(cls, ast: Node) -> "Program":
        """Render a (possibly reduced) tree; node ids are preserved."""
        source = serialize(ast)
        return cls(source, tuple(tokenize(source)), ast)

    @cached_property
    def unit_positions(self) -> dict[Unit, int]:
        """Token position of every content unit of the tree."""
        pieces = print_tree(self.ast).pieces
        if [p.text for p in pieces] != [t.text for t in self.tokens]:
            raise ValueError("tree and token sequence disagree")
        return {p.unit: i for i, p in enumerate(pieces) if p.unit is not None}

    @cached_property
    def body_units(self) -> tuple[Unit, ...]:
        """Content units of the method body, in source order."""
        return tuple(print_tree(self.ast.body).units)

    @cached_property
    def content_tokens(self) -> tuple[Token, ...]:
        return tuple(t for t in self.tokens if t.is_content)

    def __len__(self) -> int:
        return len(self.tokens)
