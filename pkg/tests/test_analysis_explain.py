from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from conftest import add_rule, method, ten_token_instance
from wheatkit.analysis import (
    DEFAULT_GRID, WheatClass, aggregate_coverage, classify_wheat, coverage, covered_positions,
    load_scores, occlusion_attribution, top_positions,
)
from wheatkit.errors import NoCandidates, NoProbabilities
from wheatkit.explain import (
    Corpus, CorpusEntry, WheatCache, generate_query_corpus, label_words, levenshtein, load_corpus,
    rank_training, rank_training_baseline, wheat_distance,
)
from wheatkit.lang import EdgeKind, flatten, serialize, tokenize
from wheatkit.model import EdgeRule, EdgeRuleSpec, LinearBag, Model, Prediction, Rule, RulePresence
from wheatkit.mutate import extract_wheat
from wheatkit.reduce import combine_k, reconstruct
from wheatkit.verify import Checker, HeaderMode, with_body


def rules(*pairs, default="misc") -> RulePresence:
    return RulePresence([Rule(frozenset(words), label) for words, label in pairs], default)


# classification ----------------------------------------------------------

def classify(program, model):
    checker = Checker(program, model)
    return classify_wheat(extract_wheat(program, model, ledger=checker.ledger), checker)


def test_single_identifier_wheat_is_lexical():
    assert classify(method("randomizer; shuffle(tasks);"), rules(({"randomizer"}, "L"))) is WheatClass.LEXICAL


def test_call_wheat_is_syntactic(running):
    assert classify(running, rules(({"mItems", "add"}, "addItem"))) is WheatClass.SYNTACTIC


def test_edge_dependent_wheat_is_semantic():
    model = EdgeRule([EdgeRuleSpec(frozenset({"total"}), "sum", frozenset({EdgeKind.COMPUTED_FROM}))], "misc")
    program = method("total = a + b; print(total);")
    assert classify(program, model) is WheatClass.SEMANTIC


def test_edge_model_without_edge_need_is_not_semantic():
    model = EdgeRule([EdgeRuleSpec(frozenset({"total"}), "sum", frozenset())], "misc")
    assert classify(method("total(a); print(x);"), model) is WheatClass.SYNTACTIC


# attribution -------------------------------------------------------------

class Bare(Model):
    kind = "Bare"

    @property
    def config(self):
        return {"kind": self.kind}

    def predict(self, source):
        return Prediction("x")


def test_occlusion_scores_by_hand():
    program = method("x; y;")
    scores = occlusion_attribution(program, LinearBag(["a", "b"], {("x", "a"): 1.0})).scores
    texts = [t.text for t in program.tokens]
    assert len(scores) == len(texts)
    assert scores[texts.index("x")] == pytest.approx(math.e / (math.e + 1) - 0.5)
    assert scores[texts.index("y")] == 0.0
    assert scores[texts.index("{")] == 0.0  # no longer parses


def test_occlusion_requires_probabilities():
    with pytest.raises(NoProbabilities):
        occlusion_attribution(method("x;"), Bare())


def test_occlusion_is_permutation_equivariant():
    model = LinearBag(["a", "b"], {("x", "a"): 1.0, ("y", "b"): 0.5, ("z", "a"): -0.3})
    one = occlusion_attribution(method("x; y; z;"), model).scores
    two = occlusion_attribution(method("z; x; y;"), model).scores
    # statements start at token 5 and take two tokens each
    by_name = lambda s, order: {n: s[5 + 2 * i] for i, n in enumerate(order)}  # noqa: E731
    assert by_name(one, "xyz") == pytest.approx(by_name(two, "zxy"))


def test_load_scores(tmp_path):
    path = tmp_path / "scores.json"
    path.write_text(json.dumps([0.1, 2, -1]))
    assert load_scores(path).scores == (0.1, 2.0, -1.0) and load_scores(path).source == "External"
    path.write_text('{"0": 1}')
    with pytest.raises(ValueError):
        load_scores(path)


# coverage ----------------------------------------------------------------

def test_ten_token_instance():
    program, wheat, scores = ten_token_instance()
    assert len(program.tokens) == 10 and wheat.positions == [5, 7]
    assert top_positions(scores, 30) == [0, 1, 5]
    assert not coverage(scores, wheat, program, 30).covered
    assert coverage(scores, wheat, program, 40).covered
    assert coverage(scores, wheat, program, 100).covered


def test_top_five_disjoint_from_wheat():
    scores = [5, 4, 3, 2, 1, 0, 0, 0, 0, 0]
    assert not covered_positions(scores, [7, 8], 50)


def test_top_positions_ties_by_position():
    assert top_positions([1.0, 1.0, 1.0, 1.0], 50) == [0, 1]


def test_aggregate_coverage():
    rows = [{10: False, 30: True}, {10: True, 30: True}, {10: False, 30: False}, {10: False, 30: True}]
    assert aggregate_coverage(rows, (10, 30)) == {10: 0.25, 30: 0.75}
    assert aggregate_coverage([], DEFAULT_GRID) == {p: 0.0 for p in DEFAULT_GRID}


@settings(max_examples=200)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=30), st.data())
def test_coverage_monotone_in_top_pct(scores, data):
    positions = data.draw(st.sets(st.integers(0, len(scores) - 1), max_size=4))
    flags = [covered_positions(scores, positions, p) for p in DEFAULT_GRID + (100,)]
    assert flags == sorted(flags)
    assert flags[-1]


# explanation -------------------------------------------------------------

def test_distance_examples():
    assert wheat_distance(tokenize("add();"), tokenize("add();")) == 0.0
    assert wheat_distance(tokenize("add();"), tokenize("put();")) == 0.25
    assert wheat_distance(["a", "b"], ["c", "d"]) == 1.0
    assert wheat_distance([], []) == 0.0


def test_label_words():
    assert label_words("getItemCount") == ["get", "item", "count"]
    assert label_words("parse_URL2") == ["parse", "url", "2"]


def make_corpus(items: dict[str, tuple[str, str]]) -> Corpus:
    return Corpus([CorpusEntry(path, method(body), label) for path, (body, label) in items.items()])


def test_identical_wheat_ranks_first(running):
    model = rules(({"add"}, "addItem"))
    corpus = make_corpus({
        "a.mini": ("x(); add(q);", "addItem"),
        "b.mini": ("add(1); y(2); z();", "addItem"),
        "c.mini": ("size(); put(k);", "addItem"),
    })
    wheat = extract_wheat(running, model)
    ranking = rank_training(wheat, corpus, "addItem", 3, model)
    assert ranking.items[0].distance == 0.0
    assert [r.path for r in ranking.items][:2] == ["a.mini", "b.mini"]


def test_rank_ties_break_by_path():
    model = rules(({"add"}, "addItem"))
    corpus = make_corpus({
        "far.mini": ("add(a, b, c, d);", "addItem"),
        "near.mini": ("add(a);", "addItem"),
        "mid.mini": ("add(a, b);", "addItem"),
    })
    target = extract_wheat(method("q(); add(z);"), model)
    got = rank_training(target, corpus, "addItem", 2, model)
    # every entry's wheat is add(); so all distances tie at 0
    assert [(r.path, r.distance) for r in got.items] == [("far.mini", 0.0), ("mid.mini", 0.0)]


class FixedWheat(WheatCache):
    def __init__(self, tokens_by_path):
        super().__init__()
        self.tokens_by_path = tokens_by_path

    def get_or_extract(self, program, model, options, ledger=None):
        tokens = self.tokens_by_path[program.source]
        return {"wheat_source": " ".join(tokens), "tokens": tokens}


def test_three_candidates_k2():
    base = list("abcdefghij")
    wheats = {"r.mini": base[:8] + list("xy"), "p.mini": base[:5] + list("xyzwv"),
              "q.mini": base[:1] + list("xyzwvutsr")}
    corpus = make_corpus({path: (f"{path[0]}();", "addItem") for path in wheats})
    cache = FixedWheat({e.program.source: wheats[e.path] for e in corpus.entries})
    got = rank_training(base, corpus, "addItem", 2, add_rule(), cache=cache)
    assert [(r.path, r.distance) for r in got.items] == [("r.mini", 0.2), ("p.mini", 0.5)]


def test_missing_label():
    corpus = make_corpus({"a.mini": ("x();", "putKey")})
    with pytest.raises(NoCandidates):
        rank_training_baseline(method("x();"), corpus, "addItem", 3)


def test_bucket_uses_label_words():
    corpus = make_corpus({"a.mini": ("x();", "addItem"), "b.mini": ("y();", "item"), "c.mini": ("z();", "put")})
    assert [e.path for e in corpus.bucket("addItem")] == ["a.mini", "b.mini"]


def test_rank_whole_bucket_when_k_large():
    corpus = make_corpus({f"{i}.mini": ("x();" * (i + 1), "addItem") for i in range(4)})
    ranking = rank_training_baseline(method("x();"), corpus, "addItem", 10)
    assert [r.path for r in ranking.items] == ["0.mini", "1.mini", "2.mini", "3.mini"]
    assert [r.distance for r in ranking.items] == sorted(r.distance for r in ranking.items)


def disagreeing_corpus() -> tuple[Corpus, RulePresence]:
    # "twin" looks like the test program but keys on a different call;
    # "cousin" looks nothing like it but shares the wheat.
    model = rules(({"add"}, "addItem"), ({"insert"}, "addItem"))
    corpus = make_corpus({
        "twin.mini": ("prepare(list); check(list); insert(list); log(list);", "addItem"),
        "cousin.mini": ("z(); add(q); w(r, s, t);", "addItem"),
    })
    return corpus, model


def test_baseline_and_wheat_rankings_differ():
    corpus, model = disagreeing_corpus()
    test = method("prepare(list); check(list); add(list); log(list);")
    wheat = extract_wheat(test, model)
    by_wheat = [r.path for r in rank_training(wheat, corpus, "addItem", 2, model).items]
    by_program = [r.path for r in rank_training_baseline(test, corpus, "addItem", 2).items]
    assert by_wheat == ["cousin.mini", "twin.mini"]
    assert by_program == ["twin.mini", "cousin.mini"]


def test_wheat_cache_on_disk(tmp_path, monkeypatch):
    from wheatkit.mutate import ExtractOptions
    monkeypatch.setenv("WHEACHA_CACHE_DIR", str(tmp_path))
    cache = WheatCache()
    record = cache.get_or_extract(method("add(x);"), add_rule(), ExtractOptions())
    assert record["wheat_source"] == "add();" or record["wheat_source"] == "add(x);"
    assert len(list(tmp_path.glob("*.json"))) == 1
    assert WheatCache(tmp_path).get_or_extract(method("add(x);"), add_rule(), ExtractOptions()) == record


def test_load_corpus_skips_bad_files(tmp_path):
    (tmp_path / "ok.mini").write_text("void f() { add(); }\n")
    (tmp_path / "bad.mini").write_text("void f() { x = ; }\n")
    (tmp_path / "labels.json").write_text(json.dumps({"ok.mini": "addItem", "bad.mini": "addItem"}))
    corpus = load_corpus(tmp_path)
    assert [e.path for e in corpus.entries] == ["ok.mini"]
    assert [p for p, _ in corpus.skipped] == ["bad.mini"]


WORDS = st.lists(st.sampled_from(["a", "b", "c", "(", ")", ";"]), max_size=8)


@given(WORDS, WORDS)
def test_distance_symmetric_and_bounded(a, b):
    d = wheat_distance(a, b)
    assert d == wheat_distance(b, a)
    assert 0.0 <= d <= 1.0
    assert (d == 0.0) == (a == b)


@given(WORDS, WORDS, WORDS)
def test_edit_distance_triangle(a, b, c):
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


# query corpus ------------------------------------------------------------

def test_query_corpus_contains_reduce_and_mutate_candidates(running):
    queries = [serialize(p.ast) for p in generate_query_corpus(running, add_rule())]
    masked = lambda body: serialize(with_body(running.ast, body))  # noqa: E731
    from wheatkit.lang import parse
    assert masked(parse("void f() { List<Obj> mItems = retQueue(); }").body) in queries
    assert masked(parse("void f() { mItems.add(position, genItem()); }").body) in queries
    assert masked(parse("void f() { add(); }").body) in queries
    assert queries == [serialize(p.ast) for p in generate_query_corpus(running, add_rule())]


def test_query_corpus_constant_model_is_the_subset_enumeration(running):
    constant = RulePresence([], "same")
    queries = {serialize(p.ast) for p in generate_query_corpus(running, constant)}
    stmts = flatten(running.ast)
    expected = {Checker(running, constant).reference_source}
    for k in (1, 2, 3):
        for subset in combine_k(stmts, k):
            suff, nec = reconstruct(subset, running, HeaderMode.MASK_NAME)
            expected |= {suff.source, nec.source}
    assert queries == expected
    assert len(queries) <= 1 + 2 * sum(math.comb(6, k) for k in (1, 2, 3))
