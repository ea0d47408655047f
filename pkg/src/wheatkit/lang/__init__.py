"""Lexer, parser, printer and tree algebra for the mini language."""

from wheatkit.lang.edges import AugmentedAst, EdgeKind, SemanticEdge, augment
from wheatkit.lang.printer import print_tree, serialize
from wheatkit.lang.program import Program
from wheatkit.lang.surgery import OOV, Rebuild, Statement, flatten, reconstruct_body, subtract, subtract_statements
from wheatkit.lang.syntax import Kind, Node, parse
from wheatkit.lang.tokens import Token, TokenKind, is_subsequence, normalize, tokenize

__all__ = [
    "AugmentedAst", "EdgeKind", "Kind", "Node", "OOV", "Program", "Rebuild", "SemanticEdge",
    "Statement", "Token", "TokenKind", "augment", "flatten", "is_subsequence", "normalize",
    "parse", "print_tree", "reconstruct_body", "serialize", "subtract", "subtract_statements",
    "tokenize",
]
