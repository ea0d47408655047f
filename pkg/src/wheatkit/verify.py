"""Sufficiency and necessity checks, with a shared prediction cache."""

from __future__ import annotations

import threading
from concurrent.futures import Future
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from wheatkit.errors import ConstituentViolation, WheatError
from wheatkit.lang.printer import print_tree, serialize
from wheatkit.lang.program import Program
from wheatkit.lang.surgery import OOV, subtract_by_identity, subtract_statements
from wheatkit.lang.syntax import Kind, Node
from wheatkit.lang.tokens import is_subsequence, tokenize
from wheatkit.model import Model, Prediction

__all__ = [
    "Checker",
    "HeaderMode",
    "PLACEHOLDER_NAME",
    "QueryLedger",
    "Verdict",
    "check_necessary",
    "check_sufficient",
    "verify_wheat",
    "with_body",
]

PLACEHOLDER_NAME = "MASKED"


class HeaderMode(str, Enum):
    MASK_NAME = "mask-name"
    KEEP_HEADER = "keep-header"


def with_body(method: Node, body: Node, mode: HeaderMode = HeaderMode.MASK_NAME) -> Node:
    """``method`` with its body swapped for ``body`` and, if asked, its name masked."""
    out = method.with_children((method.children[0], body))
    if mode is HeaderMode.MASK_NAME:
        out = replace(out, value=PLACEHOLDER_NAME)
    return out


class QueryLedger:
    """Counts model queries and caches predictions by exact source text.

    Safe to share between threads: each distinct source reaches the model
    exactly once even when requested concurrently.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._cache: dict[tuple[str, str], Future] = {}
        self.total_queries = 0
        self.lookups = 0
        self.visited: list[str] = []

    def predict(self, model: Model, source: str) -> Prediction:
        key = (model.id, source)
        with self._lock:
            self.lookups += 1
            fut = self._cache.get(key)
            owner = fut is None
            if owner:
                fut = self._cache[key] = Future()
                self.total_queries += 1
                self.visited.append(source)
        if owner:
            try:
                fut.set_result(model.predict(source))
            except WheatError as exc:
                fut.set_exception(exc)
        return fut.result()

    def snapshot(self) -> int:
        with self._lock:
            return self.total_queries


@dataclass(frozen=True)
class Verdict:
    sufficient: bool
    necessary: bool
    suff_prediction: Prediction | None
    nec_prediction: Prediction | None
    queries_used: int

    @property
    def passed(self) -> bool:
        return self.sufficient and self.necessary

    @property
    def unsatisfied(self) -> str:
        if self.passed:
            return "pass"
        if not self.sufficient and not self.necessary:
            return "Both"
        return "Sufficient" if not self.sufficient else "Necessary"


class Checker:
    """Everything needed to judge candidates against one original program.

    Candidates are method bodies (Block nodes).  By default they are
    assumed to be built from the original's own nodes, so the necessity
    check removes exactly those nodes; with ``by_identity=False`` they are
    located structurally instead (for independently parsed fragments).
    The reference label is the model's answer on the original
    rendered in the same header mode the candidates use, so the identity
    candidate is always sufficient.
    """

    def __init__(self, program: Program, model: Model, ledger: QueryLedger | None = None,
                 header_mode: HeaderMode = HeaderMode.MASK_NAME, by_identity: bool = True):
        self.program = program
        self.by_identity = by_identity
        self.model = model
        self.ledger = ledger if ledger is not None else QueryLedger()
        self.header_mode = HeaderMode(header_mode)
        if self.header_mode is HeaderMode.KEEP_HEADER:
            self.reference_source = program.source
        else:
            self.reference_source = serialize(with_body(program.ast, program.ast.body, self.header_mode))
        self.reference = self.ledger.predict(model, self.reference_source)
        self._body_content = [t for t in tokenize(print_tree(program.ast.body).text) if t.is_content]

    @property
    def label(self) -> str:
        return self.reference.label

    def suff_tree(self, candidate: Node) -> Node:
        return with_body(self.program.ast, candidate, self.header_mode)

    def nec_tree(self, statements: Sequence[Node]) -> Node:
        subtract = subtract_by_identity if self.by_identity else subtract_statements
        rest = subtract(self.program.ast, statements)
        return with_body(self.program.ast, rest.body, self.header_mode)

    def constituent(self, candidate: Node) -> bool:
        tokens = [t for t in tokenize(print_tree(candidate).text) if t.is_content]
        return is_subsequence(tokens, self._body_content, wildcard=OOV)

    def _require_constituent(self, candidate: Node) -> None:
        if not self.constituent(candidate):
            raise ConstituentViolation(print_tree(candidate).text)

    def sufficient(self, candidate: Node) -> tuple[bool, Prediction]:
        self._require_constituent(candidate)
        pred = self.ledger.predict(self.model, serialize(self.suff_tree(candidate)))
        return pred.label == self.label, pred

    def necessary(self, candidate: Node, statements: Sequence[Node] | None = None) -> tuple[bool, Prediction]:
        self._require_constituent(candidate)
        stmts = candidate.children if statements is None else statements
        pred = self.ledger.predict(self.model, serialize(self.nec_tree(stmts)))
        return pred.label != self.label, pred

    def verify(self, candidate: Node, statements: Sequence[Node] | None = None,
               short_circuit: bool = True) -> Verdict:
        """Both checks; ``statements`` overrides what gets subtracted for the necessity check."""
        before = self.ledger.snapshot()
        suff, suff_pred = self.sufficient(candidate)
        if not suff and short_circuit:
            return Verdict(False, False, suff_pred, None, self.ledger.snapshot() - before)
        nec, nec_pred = self.necessary(candidate, statements)
        return Verdict(suff, nec, suff_pred, nec_pred, self.ledger.snapshot() - before)


def _as_body(candidate: Node) -> Node:
    if candidate.kind is Kind.METHOD:
        return candidate.body
    if candidate.kind is Kind.BLOCK:
        return candidate
    return Node(-1, Kind.BLOCK, None, (candidate,))


def check_sufficient(model: Model, candidate: Node, original: Program, ledger: QueryLedger | None = None,
                     header_mode: HeaderMode = HeaderMode.MASK_NAME) -> bool:
    return Checker(original, model, ledger, header_mode, by_identity=False).sufficient(_as_body(candidate))[0]


def check_necessary(model: Model, candidate: Node, original: Program, ledger: QueryLedger | None = None,
                    header_mode: HeaderMode = HeaderMode.MASK_NAME) -> bool:
    return Checker(original, model, ledger, header_mode, by_identity=False).necessary(_as_body(candidate))[0]


def verify_wheat(model: Model, candidate: Node, original: Program, ledger: QueryLedger | None = None,
                 header_mode: HeaderMode = HeaderMode.MASK_NAME) -> Verdict:
    return Checker(original, model, ledger, header_mode, by_identity=False).verify(_as_body(candidate))
