from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from conftest import add_rule, method, table1_surrogate
from wheatkit.dd_baseline import ddmin_wheat, project, split
from wheatkit.errors import FragmentSearchExhausted, TokenLimitExceeded
from wheatkit.lang import print_tree
from wheatkit.model import Rule, RulePresence
from wheatkit.mutate import extract_wheat
from wheatkit.oracle import brute_force_check, enumeration_count
from wheatkit.verify import Checker, QueryLedger

TABLE1_TAIL = [
    ("Δ11", ["size"], "Both"),
    ("Δ12", ["return"], "Both"),
    ("Δ13", ["mItems"], "Both"),
    ("Δ14", ["add"], "Both"),
    ("Δ15", ["position"], "Both"),
    ("∇11", ["return", "mItems", "add", "position"], "Sufficient"),
    ("∇12", ["size", "mItems", "add", "position"], "Sufficient"),
    ("∇13", ["size", "return", "add", "position"], "Sufficient"),
    ("∇14", ["size", "return", "mItems", "position"], "Sufficient"),
    ("∇15", ["size", "return", "mItems", "add"], "Sufficient"),
]


def test_split_is_even_and_ordered():
    assert split(list(range(7)), 3) == [[0, 1], [2, 3], [4, 5, 6]]
    assert split([1, 2], 2) == [[1], [2]]


def test_project_keeps_structure(running):
    units = running.body_units
    add = next(u for u in units if running.tokens[running.unit_positions[u]].text == "add")
    assert print_tree(project(running, [add])).text == "add();"
    assert print_tree(project(running, [])).text == ""


def test_dd_stalls_on_table1_surrogate(running):
    result, trace = ddmin_wheat(running, table1_surrogate())
    tail = [(s.partition, list(s.tokens), s.unsatisfied) for s in trace.steps[-10:]]
    assert tail == TABLE1_TAIL
    assert [running.tokens[running.unit_positions[u]].text for u in result.units] == \
           ["size", "return", "mItems", "add", "position"]
    assert result.passed and result.token_count == 5
    assert list(trace.final_tokens) == ["size", "return", "mItems", "add", "position"]


def test_extract_beats_dd_on_table1_surrogate(running):
    dd, _ = ddmin_wheat(running, table1_surrogate())
    wheat = extract_wheat(running, table1_surrogate())
    assert wheat.source == "genItem();"
    assert wheat.token_count < dd.token_count


def test_dd_steps_are_reproducible(running):
    model = table1_surrogate()
    _, trace = ddmin_wheat(running, model)
    checker = Checker(running, model)
    for step in trace.steps[-10:]:
        units = [u for u in running.body_units if running.unit_positions[u] in step.positions]
        assert checker.verify(project(running, units), short_circuit=False).unsatisfied == step.unsatisfied


def test_dd_monotone_rule_superset_of_wheat(running):
    dd, _ = ddmin_wheat(running, add_rule())
    wheat = extract_wheat(running, add_rule())
    assert dd.passed and dd.token_count >= wheat.token_count
    assert "add" in dd.source


def test_dd_constant_model_keeps_everything(running):
    result, _ = ddmin_wheat(running, RulePresence([], "same"))
    assert not result.passed
    assert len(result.units) == len(running.body_units)


def test_dd_trace_json(running):
    _, trace = ddmin_wheat(running, table1_surrogate())
    data = trace.to_json()
    assert data["steps"][0]["partition"] == "full"
    assert set(data["steps"][-1]) == {"partition", "tokens", "positions", "unsatisfied", "candidate"}


# oracle ------------------------------------------------------------------

def test_enumeration_count():
    assert enumeration_count(5, 3) == math.comb(5, 1) + math.comb(5, 2)
    assert enumeration_count(5, 3, size_cap=1) == 5
    assert enumeration_count(9, 1) == 0


def test_single_token_wheat_is_trivially_minimal():
    program = method("x(); add(y);")
    wheat = extract_wheat(program, add_rule())
    result = brute_force_check(program, add_rule(), wheat)
    assert wheat.token_count == 1
    assert result.confirmed_minimal and result.enumerated == 0


def test_oracle_confirms_monotone_extraction():
    program = method("a(b); c(d, e); f();")
    model = RulePresence([Rule(frozenset({"c", "e"}), "L")], "M")
    wheat = extract_wheat(program, model)
    ledger = QueryLedger()
    result = brute_force_check(program, model, wheat, ledger=ledger)
    assert result.confirmed_minimal
    assert result.enumerated == enumeration_count(len(program.body_units), wheat.token_count)


def test_oracle_finds_smaller_under_non_monotone_model():
    program = method("d(d, c); c(b, d);")
    model = RulePresence([
        Rule(frozenset({"c"}), "L"),
        Rule(frozenset({"b", "d"}), "L", frozenset({"a"})),
        Rule(frozenset({"b", "c"}), "L", frozenset({"a"})),
    ], "M")
    wheat = extract_wheat(program, model)
    result = brute_force_check(program, model, wheat)
    assert not result.confirmed_minimal
    assert result.smaller_token_count < wheat.token_count
    assert result.smaller_source == "c;\nc(b);"
    assert Checker(program, model).verify(result.smaller_ast).passed


def test_oracle_token_limit(running):
    wheat = extract_wheat(running, add_rule())
    with pytest.raises(TokenLimitExceeded):
        brute_force_check(running, add_rule(), wheat, token_limit=10)


def test_oracle_parallel_is_deterministic():
    program = method("d(d, c); c(b, d);")
    model = RulePresence([Rule(frozenset({"c"}), "L"), Rule(frozenset({"b", "d"}), "L", frozenset({"a"})),
                          Rule(frozenset({"b", "c"}), "L", frozenset({"a"}))], "M")
    wheat = extract_wheat(program, model)
    seq = brute_force_check(program, model, wheat)
    par = brute_force_check(program, model, wheat, jobs=4, batch_size=3)
    assert (seq.smaller_units, seq.enumerated) == (par.smaller_units, par.enumerated)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=2, max_size=4),
       st.sets(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=2))
def test_monotone_rule_wheat_is_globally_minimal(calls, trigger):
    program = method(" ".join(f"{w}();" for w in calls))
    model = RulePresence([Rule(frozenset(trigger), "L")], "M")
    try:
        wheat = extract_wheat(program, model)
    except FragmentSearchExhausted:
        return
    assert brute_force_check(program, model, wheat).confirmed_minimal
