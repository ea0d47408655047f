"""Delta debugging over content tokens, as a baseline for wheat extraction.

A token subset becomes a program by keeping exactly those tokens' units
in the original tree and letting every structure that loses a required
part dissolve (see :class:`~wheatkit.lang.surgery.Rebuild`).  The test a
subset must pass is sufficiency and necessity together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from wheatkit.errors import ConstituentViolation, SubtreeNotFound
from wheatkit.lang.printer import Unit, print_tree
from wheatkit.lang.program import Program
from wheatkit.lang.surgery import Rebuild
from wheatkit.lang.syntax import Node
from wheatkit.model import Model
from wheatkit.verify import Checker, HeaderMode, QueryLedger

__all__ = ["DdResult", "DdStep", "DdTrace", "ddmin_wheat", "project", "split"]


def project(program: Program, keep: Sequence[Unit]) -> Node:
    """The method body that keeps only the units in ``keep``."""
    drop = set(program.body_units) - set(keep)
    return Rebuild(units=drop).body(program.ast.body)


def split(items: Sequence, n: int) -> list[list]:
    """``n`` contiguous parts; part i is items[i*len//n : (i+1)*len//n]."""
    size = len(items)
    return [list(items[i * size // n:(i + 1) * size // n]) for i in range(n)]


@dataclass(frozen=True)
class DdStep:
    partition: str
    tokens: tuple[str, ...]
    positions: tuple[int, ...]
    unsatisfied: str
    candidate: str

    def to_json(self) -> dict[str, Any]:
        return {"partition": self.partition, "tokens": list(self.tokens), "positions": list(self.positions),
                "unsatisfied": self.unsatisfied, "candidate": self.candidate}


@dataclass
class DdTrace:
    steps: list[DdStep] = field(default_factory=list)
    final_tokens: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {"steps": [s.to_json() for s in self.steps], "final_tokens": list(self.final_tokens),
                "repair": "structural closure over kept tokens"}


@dataclass(frozen=True)
class DdResult:
    units: tuple[Unit, ...]
    ast: Node
    label: str
    passed: bool
    queries: int

    @property
    def source(self) -> str:
        return print_tree(self.ast).text

    @property
    def token_count(self) -> int:
        return len(print_tree(self.ast).units)


class _Tester:
    def __init__(self, checker: Checker, trace: DdTrace):
        self.checker = checker
        self.program = checker.program
        self.trace = trace
        self.texts = dict(print_tree(self.program.ast.body).unit_texts)
        self.where = self.program.unit_positions

    def __call__(self, name: str, units: Sequence[Unit]) -> bool:
        body = project(self.program, units)
        try:
            verdict = self.checker.verify(body, short_circuit=False)
            outcome = verdict.unsatisfied
        except (ConstituentViolation, SubtreeNotFound):
            outcome = "Both"
        self.trace.steps.append(DdStep(
            name, tuple(self.texts[u] for u in units), tuple(self.where[u] for u in units),
            outcome, print_tree(body).text))
        return outcome == "pass"


def ddmin_wheat(program: Program, model: Model, ledger: QueryLedger | None = None,
                header_mode: HeaderMode = HeaderMode.MASK_NAME,
                checker: Checker | None = None) -> tuple[DdResult, DdTrace]:
    checker = checker or Checker(program, model, ledger, header_mode)
    before = checker.ledger.snapshot()
    trace = DdTrace()
    test = _Tester(checker, trace)
    current = list(program.body_units)
    passed = test("full", current)
    counter = 0
    n = 2
    while passed and len(current) >= 2:
        parts = split(current, n)
        names = list(range(counter + 1, counter + 1 + n))
        counter += n
        reduced = False
        for idx, part in zip(names, parts):
            if test(f"Δ{idx}", part):
                current, n, reduced = part, 2, True
                break
        if not reduced and n > 2:
            for idx, part in zip(names, parts):
                rest = [u for u in current if u not in set(part)]
                if test(f"∇{idx}", rest):
                    current, n, reduced = rest, max(n - 1, 2), True
                    break
        if reduced:
            continue
        if n >= len(current):
            break
        n = min(2 * n, len(current))
    trace.final_tokens = tuple(test.texts[u] for u in current)
    result = DdResult(tuple(current), project(program, current), checker.label, passed,
                      checker.ledger.snapshot() - before)
    return result, trace
