"""Exhaustive check that no shorter token subsequence would also do."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

from wheatkit.dd_baseline import project
from wheatkit.errors import ConstituentViolation, SubtreeNotFound, TokenLimitExceeded
from wheatkit.lang.printer import Unit, print_tree
from wheatkit.lang.program import Program
from wheatkit.lang.syntax import Node
from wheatkit.model import Model
from wheatkit.mutate import Wheat
from wheatkit.verify import Checker, HeaderMode, QueryLedger, Verdict

__all__ = ["DEFAULT_TOKEN_LIMIT", "OracleResult", "brute_force_check", "enumeration_count"]

DEFAULT_TOKEN_LIMIT = 14
DEFAULT_BATCH = 256


@dataclass(frozen=True)
class OracleResult:
    confirmed_minimal: bool
    enumerated: int
    smaller_units: tuple[Unit, ...] = ()
    smaller_ast: Node | None = None
    smaller_verdict: Verdict | None = None

    @property
    def smaller_source(self) -> str | None:
        return print_tree(self.smaller_ast).text if self.smaller_ast is not None else None

    @property
    def smaller_token_count(self) -> int | None:
        return len(print_tree(self.smaller_ast).units) if self.smaller_ast is not None else None


def enumeration_count(n: int, wheat_size: int, size_cap: int | None = None) -> int:
    top = wheat_size - 1 if size_cap is None else min(size_cap, wheat_size - 1)
    return sum(math.comb(n, i) for i in range(1, top + 1))


def _batches(units: tuple[Unit, ...], top: int, size: int) -> Iterator[list[tuple[Unit, ...]]]:
    batch: list[tuple[Unit, ...]] = []
    for length in range(1, top + 1):
        for combo in itertools.combinations(units, length):
            batch.append(combo)
            if len(batch) == size:
                yield batch
                batch = []
    if batch:
        yield batch


def brute_force_check(program: Program, model: Model, wheat: Wheat, size_cap: int | None = None,
                      ledger: QueryLedger | None = None, token_limit: int = DEFAULT_TOKEN_LIMIT,
                      header_mode: HeaderMode = HeaderMode.MASK_NAME, jobs: int = 1,
                      batch_size: int = DEFAULT_BATCH) -> OracleResult:
    """Try every subsequence of the body's content tokens shorter than the wheat.

    Candidates are generated in batches and evaluated in enumeration
    order (ascending length, then lexicographic positions); the first
    passer is returned.
    """
    units = program.body_units
    if len(units) > token_limit:
        raise TokenLimitExceeded(len(units), token_limit)
    checker = Checker(program, model, ledger, header_mode)
    top = wheat.token_count - 1 if size_cap is None else min(size_cap, wheat.token_count - 1)

    def judge(combo: tuple[Unit, ...]) -> tuple[Node, Verdict] | None:
        body = project(program, combo)
        try:
            verdict = checker.verify(body)
        except (ConstituentViolation, SubtreeNotFound):
            return None
        return (body, verdict) if verdict.passed else None

    enumerated = 0
    parallel = jobs > 1 and model.concurrency_safe
    pool = ThreadPoolExecutor(max_workers=jobs) if parallel else None
    try:
        for batch in _batches(units, top, batch_size):
            outcomes = list(pool.map(judge, batch)) if pool else None
            for i, combo in enumerate(batch):
                outcome = outcomes[i] if outcomes is not None else judge(combo)
                enumerated += 1
                if outcome is not None:
                    body, verdict = outcome
                    return OracleResult(False, enumerated, combo, body, verdict)
    finally:
        if pool:
            pool.shutdown()
    return OracleResult(True, enumerated)
