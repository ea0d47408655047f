"""Semantic edges over the tree: a single forward dataflow pass.

Variables are identifiers other than callee names and field names.  Joins
after an ``if`` take the union of both branches; loop bodies are walked
once and unioned with the path that skips them (no back-edge fixpoint).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from wheatkit.lang.syntax import Kind, Node, iter_nodes

__all__ = ["AugmentedAst", "EdgeKind", "SemanticEdge", "augment", "variable_ids"]


class EdgeKind(str, Enum):
    LAST_READ = "LastRead"
    LAST_WRITE = "LastWrite"
    COMPUTED_FROM = "ComputedFrom"
    LAST_LEXICAL_USE = "LastLexicalUse"
    GUARDED_BY = "GuardedBy"
    GUARDED_BY_NEGATION = "GuardedByNegation"
    FORMAL_ARG_NAME = "FormalArgName"


@dataclass(frozen=True, order=True)
class SemanticEdge:
    kind: EdgeKind
    source: int
    target: int


@dataclass(frozen=True)
class AugmentedAst:
    ast: Node
    edges: tuple[SemanticEdge, ...]

    @property
    def edge_kinds(self) -> frozenset[EdgeKind]:
        return frozenset(e.kind for e in self.edges)

    def stripped(self) -> "AugmentedAst":
        return AugmentedAst(self.ast, ())


def variable_ids(root: Node) -> list[Node]:
    """Identifier nodes that denote variables, in source order."""
    skip: set[int] = set()
    for n in iter_nodes(root):
        if n.kind is Kind.CALL and n.children[0].kind is Kind.IDENTIFIER:
            skip.add(n.children[0].id)
        elif n.kind is Kind.FIELD_ACCESS:
            skip.add(n.children[1].id)
    return [n for n in iter_nodes(root) if n.kind is Kind.IDENTIFIER and n.id not in skip and n.value != "this"]


Env = dict[str, frozenset[int]]


def _join(a: Env, b: Env) -> Env:
    return {k: a.get(k, frozenset()) | b.get(k, frozenset()) for k in a.keys() | b.keys()}


class _Pass:
    def __init__(self, method: Node):
        self.method = method
        self.params = {p.value: p for p in method.children[0].children}
        self.variables = {n.id for n in variable_ids(method.body)}
        self.edges: set[SemanticEdge] = set()
        self.last_use: dict[str, int] = {}
        self.guards: list[tuple[int, bool]] = []

    def add(self, kind: EdgeKind, src: int, dst: int) -> None:
        self.edges.add(SemanticEdge(kind, src, dst))

    def touch(self, ident: Node) -> None:
        prev = self.last_use.get(ident.value)
        if prev is not None:
            self.add(EdgeKind.LAST_LEXICAL_USE, ident.id, prev)
        self.last_use[ident.value] = ident.id
        for guard, negated in self.guards:
            self.add(EdgeKind.GUARDED_BY_NEGATION if negated else EdgeKind.GUARDED_BY, ident.id, guard)

    def read(self, ident: Node, writes: Env, reads: Env) -> None:
        self.touch(ident)
        for w in writes.get(ident.value, ()):
            self.add(EdgeKind.LAST_WRITE, ident.id, w)
        for r in reads.get(ident.value, ()):
            self.add(EdgeKind.LAST_READ, ident.id, r)
        reads[ident.value] = frozenset({ident.id})

    def write(self, ident: Node, sources: list[Node], writes: Env, reads: Env) -> None:
        self.touch(ident)
        for s in sources:
            self.add(EdgeKind.COMPUTED_FROM, ident.id, s.id)
        writes[ident.value] = frozenset({ident.id})

    def expr(self, node: Node, writes: Env, reads: Env) -> None:
        k = node.kind
        if k is Kind.IDENTIFIER:
            if node.id in self.variables:
                self.read(node, writes, reads)
            return
        if k is Kind.CALL:
            callee, args = node.children
            self.expr(callee, writes, reads)
            for a in args.children:
                self.expr(a, writes, reads)
            if callee.kind is Kind.IDENTIFIER and callee.value == self.method.value:
                params = self.method.children[0].children
                for a, p in zip(args.children, params):
                    if a.kind is Kind.IDENTIFIER:
                        self.add(EdgeKind.FORMAL_ARG_NAME, a.id, p.id)
            return
        if k is Kind.ASSIGN:
            target, rhs = node.children
            self.expr(rhs, writes, reads)
            if target.kind is Kind.IDENTIFIER and target.id in self.variables:
                if node.value != "=":
                    self.read(target, writes, reads)
                self.write(target, self._vars(rhs), writes, reads)
            else:
                self.expr(target, writes, reads)
            return
        if k is Kind.VAR_DECL:
            name = node.children[0]
            init = node.children[1] if len(node.children) > 1 else None
            if init is not None:
                self.expr(init, writes, reads)
            self.write(name, self._vars(init) if init is not None else [], writes, reads)
            return
        if k is Kind.UNARY_OP and node.value in ("++", "--") and node.children[0].kind is Kind.IDENTIFIER:
            target = node.children[0]
            if target.id in self.variables:
                self.read(target, writes, reads)
                self.write(target, [], writes, reads)
                return
        for c in node.children:
            self.expr(c, writes, reads)

    def _vars(self, node: Node | None) -> list[Node]:
        if node is None:
            return []
        return [n for n in iter_nodes(node) if n.id in self.variables]

    def stmts(self, stmts, writes: Env, reads: Env) -> tuple[Env, Env]:
        for s in stmts:
            writes, reads = self.stmt(s, writes, reads)
        return writes, reads

    def guarded(self, cond: Node, negated: bool, stmts, writes: Env, reads: Env) -> tuple[Env, Env]:
        self.guards.append((cond.id, negated))
        try:
            return self.stmts(stmts, dict(writes), dict(reads))
        finally:
            self.guards.pop()

    def stmt(self, s: Node, writes: Env, reads: Env) -> tuple[Env, Env]:
        k = s.kind
        if k is Kind.IF:
            cond = s.children[0]
            self.expr(cond, writes, reads)
            w1, r1 = self.guarded(cond, False, s.children[1].children, writes, reads)
            if len(s.children) == 3:
                w2, r2 = self.guarded(cond, True, s.children[2].children, writes, reads)
            else:
                w2, r2 = writes, reads
            return _join(w1, w2), _join(r1, r2)
        if k is Kind.WHILE:
            cond = s.children[0]
            self.expr(cond, writes, reads)
            w1, r1 = self.guarded(cond, False, s.children[1].children, writes, reads)
            return _join(w1, writes), _join(r1, reads)
        if k is Kind.FOR:
            parts = dict(zip(s.value, s.children))
            if "i" in parts:
                self.expr(parts["i"], writes, reads)
            cond = parts.get("c")
            if cond is not None:
                self.expr(cond, writes, reads)
                self.guards.append((cond.id, False))
            try:
                w1, r1 = self.stmts(s.children[-1].children, dict(writes), dict(reads))
                if "u" in parts:
                    self.expr(parts["u"], w1, r1)
            finally:
                if cond is not None:
                    self.guards.pop()
            return _join(w1, writes), _join(r1, reads)
        if k is Kind.SWITCH:
            subject = s.children[0]
            self.expr(subject, writes, reads)
            out_w, out_r = writes, reads
            for case in s.children[1:]:
                if case.value == "case":
                    self.expr(case.children[0], writes, reads)
                w1, r1 = self.guarded(subject, False, case.children[-1].children, writes, reads)
                out_w, out_r = _join(out_w, w1), _join(out_r, r1)
            return out_w, out_r
        if k in (Kind.ASSIGN, Kind.VAR_DECL):
            self.expr(s, writes, reads)
        else:
            for c in s.children:
                self.expr(c, writes, reads)
        return writes, reads


def augment(ast: Node) -> AugmentedAst:
    """Attach semantic edges to a Method tree."""
    if ast.kind is not Kind.METHOD:
        raise ValueError("augment expects a method")
    p = _Pass(ast)
    p.stmts(ast.body.children, {}, {})
    return AugmentedAst(ast, tuple(sorted(p.edges)))
