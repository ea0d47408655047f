from __future__ import annotations

import json
from pathlib import Path

import pytest

from wheatkit.corpus import builtin_model, corpus_dir
from wheatkit.lang import Program
from wheatkit.model import LinearBag, Rule, RulePresence

GOLDEN = Path(__file__).parent / "golden"

# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def table1_surrogate() -> LinearBag:
    """LinearBag tuned so the running example reproduces Table 1's verdicts."""
    weights = {(t, "addItem"): 1.0 for t in ("size", "return", "mItems", "add", "position")}
    weights[("genItem", "addItem")] = 6.0
    weights[("log", "addItem")] = -7.0
    return LinearBag(["addItem", "misc"], weights, {"addItem": -5.5})


def add_rule(**kw) -> RulePresence:
    return RulePresence([Rule(frozenset({"add"}), "addItem", **kw)], "misc")


def method(body: str, header: str = "void f()") -> Program:
    return Program.parse(f"{header} {{ {body} }}")


@pytest.fixture(scope="session")
def running() -> Program:
    return Program.parse((GOLDEN / "running.mini").read_text())


@pytest.fixture(scope="session")
def corpus_programs() -> list[tuple[str, Program]]:
    root = corpus_dir()
    labels = json.loads((root / "labels.json").read_text())
    return [(name, Program.parse((root / name).read_text())) for name in labels]


@pytest.fixture(scope="session")
def models():
    return {name: builtin_model(name) for name in ("rules-monotone", "rules-nonmonotone", "linear-bag", "edge-rule")}


def ten_token_instance():
    """``void f() { a; b; }`` with wheat ``a; b;`` scored at ranks 3 and 4."""
    from wheatkit.mutate import extract_wheat

    program = method("a; b;")
    wheat = extract_wheat(program, RulePresence([Rule(frozenset({"a", "b"}), "L")], "M"))
    scores = [0.0] * len(program.tokens)
    for rank, pos in enumerate([0, 1, *wheat.positions, 2, 3, 4, 6, 8, 9]):
        scores[pos] = 10.0 - rank
    return program, wheat, scores
