"""Pretty printer.

Besides the source text, printing yields the token stream with, for every
content token, the *unit* it came from: ``(node id, slot)``.  Identifiers
and literals own slot 0 of their node; keywords and operators are owned by
the node they belong to (an If owns ``if`` and ``else``, a VarDecl owns the
tokens of its type and its ``=``).  Units are the leaves that reduction
works on and the bridge back to token positions of the original program.
"""

from __future__ import annotations

from dataclasses import dataclass

from wheatkit.lang.syntax import Kind, Node
from wheatkit.lang.tokens import tokenize

__all__ = ["Printed", "Unit", "print_tree", "print_statements", "serialize", "type_tokens"]

Unit = tuple[int, int]
INDENT = "    "


@dataclass(frozen=True, slots=True)
class Piece:
    text: str
    unit: Unit | None = None
    space: bool = True


@dataclass(frozen=True)
class Printed:
    text: str
    pieces: tuple[Piece, ...]

    @property
    def units(self) -> list[Unit]:
        return [p.unit for p in self.pieces if p.unit is not None]

    @property
    def unit_texts(self) -> list[tuple[Unit, str]]:
        return [(p.unit, p.text) for p in self.pieces if p.unit is not None]


def type_tokens(type_text: str) -> list[tuple[str, bool]]:
    """Tokens of a type annotation as ``(text, is_content)``."""
    return [(t.text, t.is_content and t.text not in ("<", ">")) for t in tokenize(type_text)]


def _wordy(text: str) -> bool:
    return text[0].isalnum() or text[0] in "_$"


def _type_pieces(node_id: int, type_text: str, space: bool, first_slot: int = 0) -> list[Piece]:
    out, slot = [], first_slot
    prev = None
    for text, content in type_tokens(type_text):
        if prev is None:
            sp = space
        else:
            sp = prev == "," or (_wordy(prev) and _wordy(text))
        out.append(Piece(text, (node_id, slot) if content else None, sp))
        if content:
            slot += 1
        prev = text
    return out


# expressions -------------------------------------------------------------

def _expr(n: Node, space: bool = True) -> list[Piece]:
    k = n.kind
    if k in (Kind.IDENTIFIER, Kind.LITERAL):
        return [Piece(n.value, (n.id, 0), space)]
    if k is Kind.FIELD_ACCESS:
        obj, name = n.children
        return _expr(obj, space) + [Piece(".", None, False)] + _expr(name, False)
    if k is Kind.CALL:
        callee, args = n.children
        out = _expr(callee, space) + [Piece("(", None, False)]
        for i, a in enumerate(args.children):
            if i:
                out.append(Piece(",", None, False))
            out += _expr(a, i > 0)
        return out + [Piece(")", None, False)]
    if k is Kind.BINARY_OP:
        left, right = n.children
        return _expr(left, space) + [Piece(n.value, (n.id, 0), True)] + _expr(right, True)
    if k is Kind.UNARY_OP:
        (operand,) = n.children
        if n.annot == "postfix":
            return _expr(operand, space) + [Piece(n.value, (n.id, 0), False)]
        return [Piece(n.value, (n.id, 0), space)] + _expr(operand, False)
    if k is Kind.PAREN:
        return [Piece("(", None, space)] + _expr(n.children[0], False) + [Piece(")", None, False)]
    if k is Kind.ASSIGN:
        target, rhs = n.children
        return _expr(target, space) + [Piece(n.value, (n.id, 0), True)] + _expr(rhs, True)
    if k is Kind.VAR_DECL:
        out = _type_pieces(n.id, n.annot, space)
        nslots = sum(1 for p in out if p.unit is not None)
        out += _expr(n.children[0], True)
        if len(n.children) > 1:
            out += [Piece("=", (n.id, nslots), True)] + _expr(n.children[1], True)
        return out
    raise ValueError(f"not an expression: {k}")


# statements --------------------------------------------------------------

Line = tuple[int, list[Piece]]


def _semi(pieces: list[Piece]) -> list[Piece]:
    return pieces + [Piece(";", None, False)]


def _stmt(n: Node, depth: int) -> list[Line]:
    k = n.kind
    if k is Kind.EXPR_STMT:
        return [(depth, _semi(_expr(n.children[0], False)))]
    if k in (Kind.ASSIGN, Kind.VAR_DECL):
        return [(depth, _semi(_expr(n, False)))]
    if k is Kind.RETURN:
        head = [Piece("return", (n.id, 0), False)]
        if n.children:
            head += _expr(n.children[0], True)
        return [(depth, _semi(head))]
    if k in (Kind.BREAK, Kind.CONTINUE):
        return [(depth, _semi([Piece(k.value.lower(), (n.id, 0), False)]))]
    if k is Kind.IF:
        return _if(n, depth, [])
    if k is Kind.WHILE:
        cond, body = n.children
        head = [Piece("while", (n.id, 0), False), Piece("(", None, True)] + _expr(cond, False) + [Piece(")", None, False)]
        return _body(head, body, depth)
    if k is Kind.FOR:
        return _for(n, depth)
    if k is Kind.SWITCH:
        return _switch(n, depth)
    raise ValueError(f"not a statement: {k}")


def _if(n: Node, depth: int, prefix: list[Piece]) -> list[Line]:
    cond, then = n.children[0], n.children[1]
    lead = Piece("if", (n.id, 0), bool(prefix))
    head = prefix + [lead, Piece("(", None, True)] + _expr(cond, False) + [Piece(")", None, False)]
    lines = _body(head, then, depth)
    if len(n.children) == 3:
        other = n.children[2]
        els = Piece("else", (n.id, 1), True)
        if _braced(then):
            d, last = lines.pop()
            prefix2 = last + [els]
        else:
            prefix2 = [Piece("else", (n.id, 1), False)]
        if other.value == "bare" and len(other.children) == 1 and other.children[0].kind is Kind.IF:
            lines += _if(other.children[0], depth, prefix2)
        else:
            lines += _body(prefix2, other, depth)
    return lines


def _braced(block: Node) -> bool:
    return block.value is None or (block.value == "bare" and len(block.children) > 1)


def _body(head: list[Piece], block: Node, depth: int) -> list[Line]:
    if not _braced(block):
        if not block.children:
            return [(depth, head + [Piece(";", None, False)])]
        return [(depth, head)] + _stmt(block.children[0], depth + 1)
    lines: list[Line] = [(depth, head + [Piece("{", None, True)])]
    for c in block.children:
        lines += _stmt(c, depth + 1)
    return lines + [(depth, [Piece("}", None, False)])]


def _for(n: Node, depth: int) -> list[Line]:
    parts = dict(zip(n.value, n.children))
    head = [Piece("for", (n.id, 0), False), Piece("(", None, True)]
    if "i" in parts:
        head += _expr(parts["i"], False)
    head.append(Piece(";", None, False))
    if "c" in parts:
        head += _expr(parts["c"], True)
    head.append(Piece(";", None, False))
    if "u" in parts:
        head += _expr(parts["u"], True)
    head.append(Piece(")", None, False))
    return _body(head, n.children[-1], depth)


def _switch(n: Node, depth: int) -> list[Line]:
    subject, *cases = n.children
    head = [Piece("switch", (n.id, 0), False), Piece("(", None, True)] + _expr(subject, False)
    lines: list[Line] = [(depth, head + [Piece(")", None, False), Piece("{", None, True)])]
    for case in cases:
        if case.value == "case":
            label = [Piece("case", (case.id, 0), False)] + _expr(case.children[0], True)
        else:
            label = [Piece("default", (case.id, 0), False)]
        lines.append((depth + 1, label + [Piece(":", None, False)]))
        for s in case.children[-1].children:
            lines += _stmt(s, depth + 2)
    return lines + [(depth, [Piece("}", None, False)])]


def _method(n: Node) -> list[Line]:
    params, body = n.children
    head = _type_pieces(n.id, n.annot, False, first_slot=1)
    # the method's own units are header-only; slot 0 is the name
    head.append(Piece(n.value, (n.id, 0), True))
    head.append(Piece("(", None, False))
    for i, p in enumerate(params.children):
        if i:
            head.append(Piece(",", None, False))
        head += _type_pieces(p.id, p.annot, i > 0, first_slot=1)
        head.append(Piece(p.value, (p.id, 0), True))
    head.append(Piece(")", None, False))
    return _body(head, body, 0)


def _render(lines: list[Line]) -> Printed:
    out_lines, pieces = [], []
    for depth, ps in lines:
        buf = []
        for i, p in enumerate(ps):
            if i and p.space:
                buf.append(" ")
            buf.append(p.text)
        out_lines.append(INDENT * depth + "".join(buf))
        pieces += ps
    return Printed("\n".join(out_lines), tuple(pieces))


def print_tree(node: Node) -> Printed:
    """Print a Method, a Block (its statements) or a single statement."""
    if node.kind is Kind.METHOD:
        return _render(_method(node))
    if node.kind is Kind.BLOCK:
        return print_statements(node.children)
    return _render(_stmt(node, 0))


def print_statements(stmts) -> Printed:
    lines: list[Line] = []
    for s in stmts:
        lines += _stmt(s, 0)
    return _render(lines)


def serialize(node: Node) -> str:
    text = print_tree(node).text
    return text + "\n" if node.kind is Kind.METHOD else text
