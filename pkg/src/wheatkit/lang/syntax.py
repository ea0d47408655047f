"""AST node type and a recursive-descent parser for the mini language.

Grammar (informal)::

    method  := modifier* type IDENT "(" params? ")" block
    stmt    := varDecl ";" | expr assignOp expr ";" | expr ";" | "return" expr? ";"
             | "if" "(" expr ")" body ("else" body)? | "while" "(" expr ")" body
             | "for" "(" init? ";" expr? ";" update? ")" body
             | "switch" "(" expr ")" "{" case* "}" | "break" ";" | "continue" ";"
    body    := block | ";" | stmt
    expr    := unary (BINOP unary)*          (precedence climbing)
    unary   := ("-" | "!" | "++" | "--") unary | postfix
    postfix := primary ("." IDENT | "(" args? ")" | "++" | "--")*
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator

from wheatkit.errors import ParseError
from wheatkit.lang.tokens import Token, TokenKind, tokenize

__all__ = [
    "BINARY_PRECEDENCE",
    "CONTROL_KINDS",
    "Kind",
    "Node",
    "STATEMENT_KINDS",
    "iter_nodes",
    "max_id",
    "parse",
    "parse_tokens",
    "renumber",
    "same_shape",
]


class Kind(str, Enum):
    METHOD = "Method"
    PARAM_LIST = "ParamList"
    PARAM = "Param"
    BLOCK = "Block"
    IF = "If"
    WHILE = "While"
    FOR = "For"
    SWITCH = "Switch"
    CASE = "Case"
    RETURN = "Return"
    BREAK = "Break"
    CONTINUE = "Continue"
    EXPR_STMT = "ExprStmt"
    VAR_DECL = "VarDecl"
    ASSIGN = "Assign"
    CALL = "Call"
    ARG_LIST = "ArgList"
    FIELD_ACCESS = "FieldAccess"
    IDENTIFIER = "Identifier"
    LITERAL = "Literal"
    BINARY_OP = "BinaryOp"
    UNARY_OP = "UnaryOp"
    PAREN = "Paren"


STATEMENT_KINDS = frozenset(
    {Kind.IF, Kind.WHILE, Kind.FOR, Kind.SWITCH, Kind.RETURN, Kind.BREAK, Kind.CONTINUE,
     Kind.EXPR_STMT, Kind.VAR_DECL, Kind.ASSIGN}
)
CONTROL_KINDS = frozenset({Kind.IF, Kind.WHILE, Kind.FOR, Kind.SWITCH})

BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, ">": 4, "<=": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%="})
PREFIX_OPS = frozenset({"-", "!", "++", "--", "+"})
PRIMITIVE_TYPES = frozenset({"void", "int", "boolean", "char", "long", "double", "float", "byte", "short"})
MODIFIERS = frozenset({"public", "private", "protected", "static", "final"})
KEYWORD_LITERALS = frozenset({"true", "false", "null"})


@dataclass(frozen=True, slots=True)
class Node:
    """An immutable AST node.

    ``value`` holds the identifier/literal text, the operator symbol, the
    method or parameter name, the Case flavour (``case``/``default``), the
    Block style (``None`` braced, ``"bare"`` unbraced, ``"case"`` a case
    body) or the For header mask.  ``annot`` holds declared types, the
    method's modifiers plus return type, and ``"postfix"`` for ``x++``.
    """

    id: int
    kind: Kind
    value: str | None = None
    children: tuple["Node", ...] = ()
    annot: str | None = None

    def with_children(self, children) -> "Node":
        return replace(self, children=tuple(children))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def body(self) -> "Node":
        """The method body Block (Method nodes only)."""
        return self.children[1]


def iter_nodes(node: Node) -> Iterator[Node]:
    """Preorder traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def max_id(node: Node) -> int:
    return max(n.id for n in iter_nodes(node))


def renumber(node: Node, start: int = 0) -> Node:
    """Assign fresh preorder ids starting at ``start``."""
    counter = iter(range(start, 1 << 62))

    def go(n: Node) -> Node:
        nid = next(counter)
        return replace(n, id=nid, children=tuple(go(c) for c in n.children))

    return go(node)


def same_shape(a: Node, b: Node) -> bool:
    """Kind/value/annot/child-shape equality, ignoring ids."""
    if (a.kind, a.value, a.annot, len(a.children)) != (b.kind, b.value, b.annot, len(b.children)):
        return False
    return all(same_shape(x, y) for x, y in zip(a.children, b.children))


def parse(source: str) -> Node:
    return parse_tokens(tokenize(source))


def parse_tokens(tokens: list[Token]) -> Node:
    parser = _Parser(tokens)
    root = parser.method()
    parser.expect_end()
    return renumber(root)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # token helpers -------------------------------------------------------
    def peek(self, ahead: int = 0) -> Token | None:
        j = self.i + ahead
        return self.toks[j] if j < len(self.toks) else None

    def at(self, *texts: str) -> bool:
        t = self.peek()
        return t is not None and t.text in texts and t.kind in (TokenKind.PUNCT, TokenKind.OPERATOR, TokenKind.KEYWORD)

    def fail(self, expected) -> ParseError:
        t = self.peek()
        where = f"{t.text!r}" if t else "end of input"
        exp = frozenset(expected)
        return ParseError(f"unexpected {where} at token {self.i}; expected one of {sorted(exp)}", self.i, exp)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail({text})
        return self.advance()

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.peek()
        if t is None or t.kind is not TokenKind.IDENTIFIER:
            raise self.fail({"identifier"})
        self.i += 1
        return t.text

    def expect_end(self) -> None:
        if self.peek() is not None:
            raise self.fail({"end of input"})

    # declarations --------------------------------------------------------
    def method(self) -> Node:
        mods = []
        while self.peek() is not None and self.peek().text in MODIFIERS and self.peek().kind is TokenKind.KEYWORD:
            mods.append(self.advance().text)
        rtype = self.type_()
        name = self.ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptype = self.type_()
                params.append(Node(0, Kind.PARAM, self.ident(), annot=ptype))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        body = self.block()
        return Node(0, Kind.METHOD, name, (Node(0, Kind.PARAM_LIST, children=tuple(params)), body),
                    annot=" ".join(mods + [rtype]))

    def type_(self) -> str:
        t = self.peek()
        if t is None:
            raise self.fail({"type"})
        if t.kind is TokenKind.KEYWORD and t.text in PRIMITIVE_TYPES:
            text = self.advance().text
        elif t.kind is TokenKind.IDENTIFIER:
            text = self.advance().text
            while self.at(".") and self.peek(1) is not None and self.peek(1).kind is TokenKind.IDENTIFIER:
                self.advance()
                text += "." + self.advance().text
            if self.at("<"):
                self.advance()
                args = [self.type_()]
                while self.at(","):
                    self.advance()
                    args.append(self.type_())
                self.expect(">")
                text += "<" + ", ".join(args) + ">"
        else:
            raise self.fail({"type"})
        while self.at("[") and self.peek(1) is not None and self.peek(1).text == "]":
            self.advance()
            self.advance()
            text += "[]"
        return text

    def try_var_decl_start(self) -> str | None:
        """Speculatively read ``type IDENT`` followed by ``=`` or ``;``."""
        save = self.i
        try:
            ttype = self.type_()
        except ParseError:
            self.i = save
            return None
        t, nxt = self.peek(), self.peek(1)
        if (t is not None and t.kind is TokenKind.IDENTIFIER and nxt is not None
                and nxt.text in ("=", ";") and nxt.kind is not TokenKind.STRING):
            return ttype
        self.i = save
        return None

    # statements ----------------------------------------------------------
    def block(self) -> Node:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                raise self.fail({"}"})
            stmts.append(self.statement())
        self.advance()
        return Node(0, Kind.BLOCK, None, tuple(stmts))

    def body(self) -> Node:
        if self.at("{"):
            return self.block()
        if self.at(";"):
            self.advance()
            return Node(0, Kind.BLOCK, "bare")
        return Node(0, Kind.BLOCK, "bare", (self.statement(),))

    def statement(self) -> Node:
        t = self.peek()
        if t is None:
            raise self.fail({"statement"})
        if t.kind is TokenKind.KEYWORD:
            handler = {
                "if": self.if_, "while": self.while_, "for": self.for_, "switch": self.switch_,
                "return": self.return_, "break": self.jump, "continue": self.jump,
            }.get(t.text)
            if handler is not None:
                return handler()
        stmt = self.simple_statement()
        self.expect(";")
        return stmt

    def simple_statement(self) -> Node:
        """A var decl, assignment or expression, without the trailing ``;``."""
        ttype = self.try_var_decl_start()
        if ttype is not None:
            name = Node(0, Kind.IDENTIFIER, self.ident())
            if self.at("="):
                self.advance()
                return Node(0, Kind.VAR_DECL, None, (name, self.expr()), annot=ttype)
            return Node(0, Kind.VAR_DECL, None, (name,), annot=ttype)
        target = self.expr()
        t = self.peek()
        if t is not None and t.kind is TokenKind.OPERATOR and t.text in ASSIGN_OPS:
            self.advance()
            return Node(0, Kind.ASSIGN, t.text, (target, self.expr()))
        return Node(0, Kind.EXPR_STMT, None, (target,))

    def paren_expr(self) -> Node:
        self.expect("(")
        e = self.expr()
        self.expect(")")
        return e

    def if_(self) -> Node:
        self.advance()
        cond = self.paren_expr()
        then = self.body()
        if self.at("else"):
            self.advance()
            return Node(0, Kind.IF, None, (cond, then, self.body()))
        return Node(0, Kind.IF, None, (cond, then))

    def while_(self) -> Node:
        self.advance()
        cond = self.paren_expr()
        return Node(0, Kind.WHILE, None, (cond, self.body()))

    def for_(self) -> Node:
        self.advance()
        self.expect("(")
        parts, mask = [], ""
        if not self.at(";"):
            part = self.simple_statement()
            parts.append(part.children[0] if part.kind is Kind.EXPR_STMT else part)
            mask += "i"
        self.expect(";")
        if not self.at(";"):
            parts.append(self.expr())
            mask += "c"
        self.expect(";")
        if not self.at(")"):
            part = self.simple_statement()
            if part.kind is Kind.VAR_DECL:
                raise self.fail({"expression"})
            parts.append(part.children[0] if part.kind is Kind.EXPR_STMT else part)
            mask += "u"
        self.expect(")")
        parts.append(self.body())
        return Node(0, Kind.FOR, mask, tuple(parts))

    def switch_(self) -> Node:
        self.advance()
        subject = self.paren_expr()
        self.expect("{")
        cases = []
        while not self.at("}"):
            if self.at("case"):
                self.advance()
                label = self.expr()
                self.expect(":")
                head, flavour = (label,), "case"
            elif self.at("default"):
                self.advance()
                self.expect(":")
                head, flavour = (), "default"
            else:
                raise self.fail({"case", "default", "}"})
            stmts = []
            while not self.at("case", "default", "}"):
                if self.peek() is None:
                    raise self.fail({"}"})
                stmts.append(self.statement())
            cases.append(Node(0, Kind.CASE, flavour, head + (Node(0, Kind.BLOCK, "case", tuple(stmts)),)))
        self.advance()
        return Node(0, Kind.SWITCH, None, (subject, *cases))

    def return_(self) -> Node:
        self.advance()
        if self.at(";"):
            self.advance()
            return Node(0, Kind.RETURN)
        e = self.expr()
        self.expect(";")
        return Node(0, Kind.RETURN, None, (e,))

    def jump(self) -> Node:
        word = self.advance().text
        self.expect(";")
        return Node(0, Kind.BREAK if word == "break" else Kind.CONTINUE)

    # expressions ---------------------------------------------------------
    def expr(self, min_prec: int = 1) -> Node:
        left = self.unary()
        while True:
            t = self.peek()
            if t is None or t.kind is not TokenKind.OPERATOR:
                break
            prec = BINARY_PRECEDENCE.get(t.text)
            if prec is None or prec < min_prec:
                break
            self.advance()
            right = self.expr(prec + 1)
            left = Node(0, Kind.BINARY_OP, t.text, (left, right))
        return left

    def unary(self) -> Node:
        t = self.peek()
        if t is not None and t.kind is TokenKind.OPERATOR and t.text in PREFIX_OPS:
            self.advance()
            return Node(0, Kind.UNARY_OP, t.text, (self.unary(),))
        return self.postfix()

    def postfix(self) -> Node:
        node = self.primary()
        while True:
            if self.at("."):
                self.advance()
                node = Node(0, Kind.FIELD_ACCESS, None, (node, Node(0, Kind.IDENTIFIER, self.ident())))
            elif self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.expr())
                self.expect(")")
                node = Node(0, Kind.CALL, None, (node, Node(0, Kind.ARG_LIST, children=tuple(args))))
            elif self.at("++", "--"):
                op = self.advance().text
                return Node(0, Kind.UNARY_OP, op, (node,), annot="postfix")
            else:
                return node

    def primary(self) -> Node:
        t = self.peek()
        if t is None:
            raise self.fail({"expression"})
        if t.kind is TokenKind.IDENTIFIER or (t.kind is TokenKind.KEYWORD and t.text == "this"):
            self.advance()
            return Node(0, Kind.IDENTIFIER, t.text)
        if t.kind in (TokenKind.NUMBER, TokenKind.STRING) or (
                t.kind is TokenKind.KEYWORD and t.text in KEYWORD_LITERALS):
            self.advance()
            return Node(0, Kind.LITERAL, t.text)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return Node(0, Kind.PAREN, None, (inner,))
        raise self.fail({"expression"})
