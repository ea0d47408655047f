"""Tree surgery: structural closure, subtraction, flattening, re-nesting.

All edits go through one primitive, :class:`Rebuild`.  It copies a tree
while (a) dropping individual token units and (b) dissolving whole nodes.
A node that loses a part it cannot live without dissolves too, and its
surviving children are handed upwards as *loose* items until some parent
can hold them.  A Block holds anything: loose expressions become
standalone ``expr;`` statements in source order.  This single rule gives
leaf deletion its minimal closure, gives subtraction its dangling-node
repair, and turns a token subset into a program for delta debugging.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

from wheatkit.errors import SubtreeNotFound
from wheatkit.lang.printer import Unit, print_statements, type_tokens
from wheatkit.lang.syntax import BINARY_PRECEDENCE, CONTROL_KINDS, Kind, Node, iter_nodes, max_id

__all__ = [
    "OOV",
    "Rebuild",
    "Statement",
    "control_inner",
    "flatten",
    "is_expression",
    "locate",
    "owned_slots",
    "predicate_of",
    "reconstruct_body",
    "subtract",
    "subtract_by_identity",
    "subtract_statements",
]

OOV = "oov"

EXPRESSION_KINDS = frozenset(
    {Kind.IDENTIFIER, Kind.LITERAL, Kind.CALL, Kind.FIELD_ACCESS, Kind.BINARY_OP, Kind.UNARY_OP, Kind.PAREN}
)
_PRIMARY = frozenset({Kind.IDENTIFIER, Kind.LITERAL, Kind.CALL, Kind.FIELD_ACCESS, Kind.PAREN})


def is_expression(node: Node) -> bool:
    return node.kind in EXPRESSION_KINDS


def owned_slots(node: Node) -> int:
    """How many content tokens ``node`` owns directly (its units)."""
    k = node.kind
    if k is Kind.VAR_DECL:
        return _type_units(node.annot) + (1 if len(node.children) > 1 else 0)
    if k is Kind.IF:
        return 2 if len(node.children) == 3 else 1
    if k in (Kind.IDENTIFIER, Kind.LITERAL, Kind.BINARY_OP, Kind.UNARY_OP, Kind.ASSIGN, Kind.WHILE,
             Kind.FOR, Kind.SWITCH, Kind.CASE, Kind.RETURN, Kind.BREAK, Kind.CONTINUE):
        return 1
    return 0


@lru_cache(maxsize=None)
def _type_units(type_text: str) -> int:
    return sum(1 for _, content in type_tokens(type_text) if content)


def _prec(node: Node) -> int:
    if node.kind is Kind.BINARY_OP:
        return BINARY_PRECEDENCE[node.value]
    if node.kind is Kind.UNARY_OP:
        return 7 if node.annot != "postfix" else 8
    return 9


def _fits_left(op: str, item: Node) -> bool:
    return is_expression(item) and _prec(item) >= BINARY_PRECEDENCE[op]


def _fits_right(op: str, item: Node) -> bool:
    return is_expression(item) and _prec(item) > BINARY_PRECEDENCE[op]


class Rebuild:
    """Copy a tree, dropping ``units`` and dissolving ``nodes``.

    Surviving nodes keep their ids; synthesized ExprStmt wrappers get ids
    above every id seen so far (``next_id``).
    """

    def __init__(self, units: Iterable[Unit] = (), nodes: Iterable[int] = (), next_id: int = 0):
        self.units = frozenset(units)
        self.nodes = frozenset(nodes)
        self._next = next_id

    def fresh(self) -> int:
        self._next += 1
        return self._next

    def dropped(self, node: Node, slot: int = 0) -> bool:
        return (node.id, slot) in self.units

    # entry points ---------------------------------------------------------
    def method(self, method: Node) -> Node:
        self._next = max(self._next, max_id(method))
        params, body = method.children
        return method.with_children((params, self.block(body, self.stmts(body))))

    def body(self, block: Node) -> Node:
        self._next = max(self._next, max_id(block))
        return self.block(block, self.stmts(block))

    # blocks ---------------------------------------------------------------
    def stmts(self, block: Node) -> list[Node]:
        out: list[Node] = []
        for child in block.children:
            for item in self.items(child):
                out.append(Node(self.fresh(), Kind.EXPR_STMT, None, (item,)) if is_expression(item) else item)
        return out

    @staticmethod
    def block(orig: Node, stmts: Sequence[Node]) -> Node:
        value = orig.value
        if value == "bare" and len(stmts) > 1:
            value = None
        return Node(orig.id, Kind.BLOCK, value, tuple(stmts))

    # the closure rules ----------------------------------------------------
    def items(self, n: Node) -> list[Node]:
        if n.id in self.nodes:
            return self.loose(n)
        handler = getattr(self, "_" + n.kind.name.lower())
        return handler(n)

    def loose(self, n: Node) -> list[Node]:
        out: list[Node] = []
        for c in n.children:
            out += self.stmts(c) if c.kind is Kind.BLOCK else self.items(c)
        return out

    def _identifier(self, n: Node) -> list[Node]:
        return [] if self.dropped(n) else [n]

    _literal = _identifier

    def _field_access(self, n: Node) -> list[Node]:
        obj, name = (self.items(c) for c in n.children)
        if len(obj) == 1 and len(name) == 1 and obj[0].kind in _PRIMARY and name[0].kind is Kind.IDENTIFIER:
            return [n.with_children((obj[0], name[0]))]
        return obj + name

    def _call(self, n: Node) -> list[Node]:
        callee, args = n.children
        head = self.items(callee)
        rest = self.loose(args) if args.id not in self.nodes else self.loose(args)
        if len(head) == 1 and head[0].kind in _PRIMARY and args.id not in self.nodes:
            return [n.with_children((head[0], args.with_children(rest)))]
        return head + rest

    def _arg_list(self, n: Node) -> list[Node]:
        return self.loose(n)

    def _binary_op(self, n: Node) -> list[Node]:
        left, right = (self.items(c) for c in n.children)
        if self.dropped(n):
            return left + right
        if len(left) == 1 and len(right) == 1 and _fits_left(n.value, left[0]) and _fits_right(n.value, right[0]):
            return [n.with_children((left[0], right[0]))]
        return left + right

    def _unary_op(self, n: Node) -> list[Node]:
        operand = self.items(n.children[0])
        if self.dropped(n):
            return operand
        ok = operand and len(operand) == 1 and (
            operand[0].kind in _PRIMARY
            or (n.annot != "postfix" and operand[0].kind is Kind.UNARY_OP)
        )
        return [n.with_children(operand)] if ok else operand

    def _paren(self, n: Node) -> list[Node]:
        inner = self.items(n.children[0])
        return [n.with_children(inner)] if len(inner) == 1 and is_expression(inner[0]) else inner

    def _expr_stmt(self, n: Node) -> list[Node]:
        inner = self.items(n.children[0])
        if len(inner) == 1 and is_expression(inner[0]):
            return [n.with_children(inner)]
        return inner

    def _assign(self, n: Node) -> list[Node]:
        target, rhs = (self.items(c) for c in n.children)
        if not self.dropped(n) and len(target) == 1 and len(rhs) == 1 and all(
                is_expression(x) for x in (target[0], rhs[0])):
            return [n.with_children((target[0], rhs[0]))]
        return target + rhs

    def _var_decl(self, n: Node) -> list[Node]:
        ntype = _type_units(n.annot)
        name = self.items(n.children[0])
        init = self.items(n.children[1]) if len(n.children) > 1 else []
        if any(self.dropped(n, s) for s in range(ntype)) or len(name) != 1 or name[0].kind is not Kind.IDENTIFIER:
            return name + init
        if len(n.children) == 1:
            return [n.with_children(name)]
        if self.dropped(n, ntype) or len(init) != 1:
            return [n.with_children(name)] + init
        return [n.with_children((name[0], init[0]))]

    def _return(self, n: Node) -> list[Node]:
        expr = self.items(n.children[0]) if n.children else []
        if self.dropped(n):
            return expr
        if len(expr) == 1:
            return [n.with_children(expr)]
        return [n.with_children(())] + expr

    def _break(self, n: Node) -> list[Node]:
        return [] if self.dropped(n) else [n]

    _continue = _break

    def _block(self, n: Node) -> list[Node]:
        return self.stmts(n)

    def _if(self, n: Node) -> list[Node]:
        cond = self.items(n.children[0])
        then_b = n.children[1]
        else_b = n.children[2] if len(n.children) == 3 else None
        then_s = self.stmts(then_b)
        else_s = self.stmts(else_b) if else_b is not None else []
        if (self.dropped(n) or len(cond) != 1 or not is_expression(cond[0]) or then_b.id in self.nodes
                or (else_b is not None and else_b.id in self.nodes)):
            return cond + then_s + else_s
        then_new = self.block(then_b, then_s)
        if else_b is None:
            return [n.with_children((cond[0], then_new))]
        if self.dropped(n, 1):
            return [n.with_children((cond[0], then_new))] + else_s
        return [n.with_children((cond[0], then_new, self.block(else_b, else_s)))]

    def _while(self, n: Node) -> list[Node]:
        cond = self.items(n.children[0])
        body = n.children[1]
        stmts = self.stmts(body)
        if self.dropped(n) or len(cond) != 1 or not is_expression(cond[0]) or body.id in self.nodes:
            return cond + stmts
        return [n.with_children((cond[0], self.block(body, stmts)))]

    def _for(self, n: Node) -> list[Node]:
        body = n.children[-1]
        parts = [(tag, self.items(c)) for tag, c in zip(n.value, n.children)]
        stmts = self.stmts(body)
        spilled = [x for _, got in parts for x in got] + stmts
        if self.dropped(n) or body.id in self.nodes or any(len(got) > 1 for _, got in parts):
            return spilled
        for tag, got in parts:
            if got and tag == "c" and not is_expression(got[0]):
                return spilled
            if got and tag == "u" and got[0].kind is Kind.VAR_DECL:
                return spilled
        kept = [(tag, got[0]) for tag, got in parts if got]
        mask = "".join(tag for tag, _ in kept)
        return [replace(n, value=mask, children=tuple(x for _, x in kept) + (self.block(body, stmts),))]

    def _switch(self, n: Node) -> list[Node]:
        subject = self.items(n.children[0])
        cases, spill = [], []
        for case in n.children[1:]:
            if case.id in self.nodes:
                spill += self.loose(case)
                continue
            label = self.items(case.children[0]) if case.value == "case" else []
            stmts = self.stmts(case.children[-1])
            if self.dropped(case) or (case.value == "case" and (len(label) != 1 or not is_expression(label[0]))):
                spill += label + stmts
                continue
            block = case.children[-1]
            cases.append(case.with_children(tuple(label) + (self.block(block, stmts),)))
        if self.dropped(n) or len(subject) != 1 or not is_expression(subject[0]):
            loose_cases = []
            for c in cases:
                loose_cases += list(c.children[:-1]) + list(c.children[-1].children)
            return subject + loose_cases + spill
        return [n.with_children((subject[0], *cases))] + spill

    def _case(self, n: Node) -> list[Node]:
        return self.loose(n)


# subtraction ------------------------------------------------------------

def _label_eq(s: Node, t: Node) -> bool:
    if s.kind is Kind.IDENTIFIER and s.value == OOV and t.kind in (Kind.IDENTIFIER, Kind.LITERAL):
        return True
    if s.kind is not t.kind:
        return False
    if s.kind in (Kind.BLOCK, Kind.FOR):
        return True
    return s.value == t.value and s.annot == t.annot


class _Matcher:
    """Order-preserving embedding of a fragment tree into a program tree.

    A fragment node matches a program node of the same kind and value
    whose children embed its children in order.  Program nodes the
    fragment skips stay unmatched; a fragment child may also sit anywhere
    below an unmatched program node (that node was collapsed away when
    the fragment was derived).
    """

    def __init__(self, claimed: frozenset[int]):
        self.claimed = claimed
        self._memo: dict = {}

    def here(self, s: Node, t: Node) -> frozenset[int] | None:
        if t.id in self.claimed or not _label_eq(s, t):
            return None
        inner = self.align(s.children, t.children)
        return None if inner is None else inner | {t.id}

    def align(self, ss: tuple[Node, ...], ts: tuple[Node, ...]) -> frozenset[int] | None:
        if not ss:
            return frozenset()
        if not ts:
            return None
        key = (tuple(id(x) for x in ss), tuple(id(x) for x in ts))
        if key in self._memo:
            return self._memo[key]
        result = self._align(ss, ts)
        self._memo[key] = result
        return result

    def _align(self, ss, ts):
        t, rest = ts[0], ts[1:]
        hit = self.here(ss[0], t)
        if hit is not None:
            tail = self.align(ss[1:], rest)
            if tail is not None:
                return hit | tail
        if t.children:
            for j in range(len(ss), 0, -1):
                inside = self.align(ss[:j], t.children)
                if inside is not None:
                    tail = self.align(ss[j:], rest)
                    if tail is not None:
                        return inside | tail
        return self.align(ss, rest)


def locate(statement: Node, root: Node, claimed: frozenset[int] = frozenset()) -> frozenset[int]:
    """Program node ids matched by ``statement``; leftmost in preorder wins."""
    matcher = _Matcher(claimed)
    for t in iter_nodes(root):
        hit = matcher.here(statement, t)
        if hit is not None:
            return hit
    if statement.kind is Kind.EXPR_STMT:
        inner = statement.children[0]
        for t in iter_nodes(root):
            hit = matcher.here(inner, t)
            if hit is not None:
                return hit
    raise SubtreeNotFound(print_statements([statement]).text)


def subtract_statements(method: Node, statements: Sequence[Node]) -> Node:
    """``method`` with every statement of the fragment located and removed."""
    claimed: frozenset[int] = frozenset()
    body = method.body
    for s in statements:
        claimed |= locate(s, body, claimed)
    return Rebuild(nodes=claimed).method(method)


def subtract_by_identity(method: Node, statements: Sequence[Node]) -> Node:
    """Subtraction for fragments built from ``method``'s own nodes.

    Such a fragment needs no searching: its nodes carry the ids they had
    in the program, so exactly those are removed.  Ids the program does
    not have (wrappers synthesized during reduction) are ignored.
    """
    present = {n.id for n in iter_nodes(method.body)} - {method.body.id}
    ids = {n.id for s in statements for n in iter_nodes(s)} & present
    return Rebuild(nodes=ids).method(method)


def subtract(program: Node, fragment: Node) -> Node:
    """Definition-level subtraction; ``fragment`` is a Block or Method."""
    block = fragment.body if fragment.kind is Kind.METHOD else fragment
    return subtract_statements(program, block.children)


# flatten / reconstruct --------------------------------------------------

@dataclass(frozen=True)
class Statement:
    ast: Node
    origin: int

    @property
    def source(self) -> str:
        return print_statements([self.ast]).text


def control_inner(node: Node) -> list[Node]:
    """Statements nested directly inside a control statement, in order."""
    if node.kind is Kind.IF:
        return [s for b in node.children[1:] for s in b.children]
    if node.kind in (Kind.WHILE, Kind.FOR):
        return list(node.children[-1].children)
    if node.kind is Kind.SWITCH:
        return [s for case in node.children[1:] for s in case.children[-1].children]
    return []


def predicate_of(node: Node) -> Node:
    """A control statement with its body emptied (cases kept, bodies emptied)."""
    if node.kind is Kind.IF:
        then = node.children[1]
        return node.with_children((node.children[0], Node(then.id, Kind.BLOCK, "bare")))
    if node.kind in (Kind.WHILE, Kind.FOR):
        body = node.children[-1]
        return node.with_children(node.children[:-1] + (Node(body.id, Kind.BLOCK, "bare"),))
    if node.kind is Kind.SWITCH:
        cases = [c.with_children(c.children[:-1] + (c.children[-1].with_children(()),)) for c in node.children[1:]]
        return node.with_children((node.children[0], *cases))
    raise ValueError(f"not a control statement: {node.kind}")


def flatten(method: Node) -> list[Statement]:
    out: list[Statement] = []

    def walk(stmts):
        for s in stmts:
            if s.kind in CONTROL_KINDS:
                out.append(Statement(predicate_of(s), s.id))
                walk(control_inner(s))
            else:
                out.append(Statement(s, s.id))

    walk(method.body.children)
    return out


def reconstruct_body(method: Node, selected: Iterable[int]) -> Node:
    """The selected flattened statements, re-nested where their predicate is selected."""
    chosen = frozenset(selected)

    def keep(stmts) -> list[Node]:
        out: list[Node] = []
        for s in stmts:
            if s.kind in CONTROL_KINDS:
                if s.id in chosen:
                    out.append(renest(s))
                else:
                    out += keep(control_inner(s))
            elif s.id in chosen:
                out.append(s)
        return out

    def sub_block(block: Node, stmts: list[Node]) -> Node:
        if block.value == "case":
            return block.with_children(stmts)
        if not stmts:
            return Node(block.id, Kind.BLOCK, "bare")
        style = "bare" if block.value == "bare" and len(stmts) == 1 else None
        return Node(block.id, Kind.BLOCK, style, tuple(stmts))

    def renest(s: Node) -> Node:
        if s.kind is Kind.IF:
            then = sub_block(s.children[1], keep(s.children[1].children))
            if len(s.children) == 3:
                other = keep(s.children[2].children)
                if other:
                    return s.with_children((s.children[0], then, sub_block(s.children[2], other)))
            return s.with_children((s.children[0], then))
        if s.kind in (Kind.WHILE, Kind.FOR):
            body = s.children[-1]
            return s.with_children(s.children[:-1] + (sub_block(body, keep(body.children)),))
        cases = [c.with_children(c.children[:-1] + (sub_block(c.children[-1], keep(c.children[-1].children)),))
                 for c in s.children[1:]]
        return s.with_children((s.children[0], *cases))

    body = method.body
    return Node(body.id, Kind.BLOCK, None, tuple(keep(body.children)))
