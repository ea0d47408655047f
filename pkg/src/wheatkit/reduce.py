"""Coarse search: the smallest statement subsets that are sufficient and necessary."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

from wheatkit.errors import FragmentSearchExhausted
from wheatkit.lang.program import Program
from wheatkit.lang.surgery import Statement, flatten, reconstruct_body
from wheatkit.lang.syntax import Node
from wheatkit.model import Model
from wheatkit.verify import Checker, HeaderMode, QueryLedger, Verdict

__all__ = ["DEFAULT_MAX_K", "Fragment", "combine_k", "find_minimum_fragments", "reconstruct"]

log = logging.getLogger(__name__)

DEFAULT_MAX_K = 3


@dataclass(frozen=True)
class Fragment:
    statements: tuple[Statement, ...]
    body: Node
    verdict: Verdict
    suff_program: Program
    nec_program: Program

    @property
    def k(self) -> int:
        return len(self.statements)


def combine_k(statements: Sequence, k: int) -> Iterator[tuple]:
    """Every k-subset, in lexicographic index order."""
    if not 1 <= k <= len(statements):
        raise ValueError(f"k must be in 1..{len(statements)}, got {k}")
    return itertools.combinations(statements, k)


def reconstruct(subset: Sequence[Statement], program: Program,
                header_mode: HeaderMode = HeaderMode.MASK_NAME) -> tuple[Program, Program]:
    """The sufficiency program and the necessity program for a statement subset."""
    checker = _Shape(program, header_mode)
    body = reconstruct_body(program.ast, [s.origin for s in subset])
    return (Program.from_ast(checker.suff_tree(body)),
            Program.from_ast(checker.nec_tree([s.ast for s in subset])))


class _Shape(Checker):
    """A Checker that never queries a model; only builds programs."""

    def __init__(self, program: Program, header_mode: HeaderMode):
        self.program = program
        self.header_mode = HeaderMode(header_mode)
        self.by_identity = True


def _evaluate(checker: Checker, program: Program, subset: tuple[Statement, ...]) -> Fragment | None:
    body = reconstruct_body(program.ast, [s.origin for s in subset])
    stmts = [s.ast for s in subset]
    verdict = checker.verify(body, stmts)
    if not verdict.passed:
        return None
    return Fragment(subset, body, verdict, Program.from_ast(checker.suff_tree(body)),
                    Program.from_ast(checker.nec_tree(stmts)))


def find_minimum_fragments(program: Program, model: Model, max_k: int = DEFAULT_MAX_K,
                           ledger: QueryLedger | None = None,
                           header_mode: HeaderMode = HeaderMode.MASK_NAME,
                           jobs: int = 1, checker: Checker | None = None) -> list[Fragment]:
    """All passing fragments of the smallest passing size, in enumeration order.

    Proper subsets are tried first (sizes 1..min(max_k, n-1)).  When the
    body is so short that every proper subset has been tried, the whole
    body is tried as a last resort, since the wheat may be all of it.
    """
    if max_k < 1:
        raise ValueError("max_k must be at least 1")
    checker = checker or Checker(program, model, ledger, header_mode)
    statements = flatten(program.ast)
    n = len(statements)
    sizes = list(range(1, min(max_k, n - 1) + 1))
    if n and n <= max_k:
        sizes.append(n)
    parallel = jobs > 1 and model.concurrency_safe
    for k in sizes:
        subsets = list(combine_k(statements, k))
        if parallel:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(lambda s: _evaluate(checker, program, s), subsets))
        else:
            results = [_evaluate(checker, program, s) for s in subsets]
        found = [f for f in results if f is not None]
        log.debug("k=%d: %d of %d subsets pass", k, len(found), len(subsets))
        if found:
            return found
    raise FragmentSearchExhausted(max_k)
