"""Fine search: shrink a fragment leaf by leaf until nothing more can go.

Leaves here are token units: identifiers and literals, and also the
keyword or operator a statement or expression owns.  Deleting a unit
drops whatever structure can no longer stand without it (see
:class:`~wheatkit.lang.surgery.Rebuild`); if deletion breaks the checks,
an identifier or literal is instead renamed to ``oov``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

from wheatkit.errors import ConstituentViolation, FixpointCapExceeded, SubtreeNotFound
from wheatkit.lang.printer import Unit, print_tree
from wheatkit.lang.program import Program
from wheatkit.lang.surgery import OOV, Rebuild
from wheatkit.lang.syntax import Kind, Node, iter_nodes, max_id
from wheatkit.lang.tokens import Token, tokenize
from wheatkit.model import Model
from wheatkit.reduce import DEFAULT_MAX_K, Fragment, find_minimum_fragments
from wheatkit.verify import Checker, HeaderMode, QueryLedger, Verdict

__all__ = [
    "DEFAULT_FIXPOINT_CAP",
    "ExtractOptions",
    "Mutator",
    "Wheat",
    "extract_wheat",
    "find_features",
    "is_one_tree_minimal",
    "replace_node",
]

log = logging.getLogger(__name__)

DEFAULT_FIXPOINT_CAP = 50


def replace_node(root: Node, node_id: int, new: Node) -> Node:
    if root.id == node_id:
        return new
    if not root.children:
        return root
    kids = tuple(replace_node(c, node_id, new) for c in root.children)
    if all(a is b for a, b in zip(kids, root.children)):
        return root
    return root.with_children(kids)


def _find(root: Node, node_id: int) -> Node | None:
    return next((n for n in iter_nodes(root) if n.id == node_id), None)


@dataclass(frozen=True)
class Wheat:
    ast: Node
    program: Program
    label: str
    verdict: Verdict
    source_fragment: Fragment | None = None
    oov_substitutions: tuple[tuple[int, str], ...] = ()
    queries: int = 0

    @cached_property
    def source(self) -> str:
        return print_tree(self.ast).text

    @cached_property
    def tokens(self) -> list[Token]:
        return tokenize(self.source)

    @cached_property
    def units(self) -> list[Unit]:
        return print_tree(self.ast).units

    @property
    def token_count(self) -> int:
        """Number of content tokens (punctuation does not count)."""
        return len(self.units)

    @property
    def node_count(self) -> int:
        return sum(1 for _ in iter_nodes(self.ast)) - 1

    @property
    def positions(self) -> list[int]:
        """Positions of the wheat's tokens in the original program's token sequence."""
        where = self.program.unit_positions
        return [where[u] for u in self.units if u in where]

    @property
    def fragment_k(self) -> int | None:
        return self.source_fragment.k if self.source_fragment is not None else None


class Mutator:
    """Mutable search state for one fragment; every method keeps the tree valid."""

    def __init__(self, checker: Checker, root: Node):
        self.checker = checker
        self.root = root
        self.substitutions: dict[int, str] = {}
        self._next_id = max(max_id(checker.program.ast), max_id(root))

    def accepts(self, tree: Node) -> bool:
        try:
            return self.checker.verify(tree).passed
        except (ConstituentViolation, SubtreeNotFound):
            return False

    def units(self) -> list[Unit]:
        return print_tree(self.root).units

    def delete_node(self, unit: Unit) -> bool:
        """Remove one unit plus whatever no longer stands; keep the result only if it verifies."""
        rebuild = Rebuild(units={unit}, next_id=self._next_id)
        tree = rebuild.body(self.root)
        if not self.accepts(tree):
            return False
        self.root = tree
        self._next_id = rebuild.fresh()
        return True

    def mutate_node(self, node_id: int) -> bool:
        node = _find(self.root, node_id)
        if node is None or node.kind not in (Kind.IDENTIFIER, Kind.LITERAL):
            return False
        if node.kind is Kind.IDENTIFIER and node.value == OOV:
            return True
        tree = replace_node(self.root, node_id, Node(node_id, Kind.IDENTIFIER, OOV))
        if not self.accepts(tree):
            return False
        self.root = tree
        self.substitutions.setdefault(node_id, node.value)
        return True

    def mutate_pass(self) -> bool:
        changed = False
        for unit in self.units():
            if unit not in set(self.units()):
                continue
            if self.delete_node(unit):
                changed = True
                continue
            node = _find(self.root, unit[0])
            if node.kind in (Kind.IDENTIFIER, Kind.LITERAL) and node.value != OOV and self.mutate_node(node.id):
                changed = True
        return changed

    def to_fixpoint(self, cap: int = DEFAULT_FIXPOINT_CAP) -> Node:
        for _ in range(cap):
            if not self.mutate_pass():
                return self.root
        raise FixpointCapExceeded(cap, self.root)

    def live_substitutions(self) -> tuple[tuple[int, str], ...]:
        alive = {n.id for n in iter_nodes(self.root) if n.kind is Kind.IDENTIFIER and n.value == OOV}
        return tuple(sorted((i, v) for i, v in self.substitutions.items() if i in alive))


def _fixpoint(checker: Checker, fragment: Fragment, cap: int) -> Wheat:
    m = Mutator(checker, fragment.body)
    tree = m.to_fixpoint(cap)
    verdict = checker.verify(tree)
    return Wheat(tree, checker.program, checker.label, verdict, fragment, m.live_substitutions())


def find_features(fragments: Sequence[Fragment], checker: Checker, cap: int = DEFAULT_FIXPOINT_CAP,
                  jobs: int = 1) -> Wheat:
    """Fixpoint every fragment; keep the smallest (tokens, then nodes, then order)."""
    if not fragments:
        raise ValueError("no fragments to refine")
    if jobs > 1 and checker.model.concurrency_safe and len(fragments) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(lambda f: _fixpoint(checker, f, cap), fragments))
    else:
        found = [_fixpoint(checker, f, cap) for f in fragments]
    best = min(range(len(found)), key=lambda i: (found[i].token_count, found[i].node_count, i))
    return found[best]


@dataclass(frozen=True)
class ExtractOptions:
    max_k: int = DEFAULT_MAX_K
    fixpoint_cap: int = DEFAULT_FIXPOINT_CAP
    header_mode: HeaderMode = HeaderMode.MASK_NAME
    jobs: int = 1


def extract_wheat(program: Program, model: Model, options: ExtractOptions | None = None,
                  ledger: QueryLedger | None = None) -> Wheat:
    options = options or ExtractOptions()
    ledger = ledger if ledger is not None else QueryLedger()
    before = ledger.snapshot()
    checker = Checker(program, model, ledger, options.header_mode)
    fragments = find_minimum_fragments(program, model, options.max_k, ledger, options.header_mode,
                                       options.jobs, checker)
    wheat = find_features(fragments, checker, options.fixpoint_cap, options.jobs)
    return replace(wheat, queries=ledger.snapshot() - before)


def is_one_tree_minimal(wheat: Wheat, checker: Checker) -> bool:
    """No single unit can be deleted, and no name renamed to oov, without failing."""
    for unit in wheat.units:
        probe = Mutator(checker, wheat.ast)
        if probe.delete_node(unit):
            return False
        node = _find(wheat.ast, unit[0])
        if node.kind in (Kind.IDENTIFIER, Kind.LITERAL) and node.value != OOV and probe.mutate_node(node.id):
            return False
    return True
