"""The shipped demo corpus, its generator, and the built-in demo models."""

from __future__ import annotations

import json
import random
from importlib import resources
from pathlib import Path
from typing import Iterator

from wheatkit.lang.program import Program
from wheatkit.model import Model, model_from_config

__all__ = [
    "MODEL_NAMES",
    "builtin_model",
    "builtin_models",
    "corpus_dir",
    "generate_corpus",
    "models_dir",
    "write_corpus",
]

# Statements carrying each topic's signal; {c} is a collection, {v}/{w} names.
SIGNALS = {
    "addItem": ["{c}.add({v});", "add({v});", "{c}.add({v}, {w});", "if ({v} > 0) {{ {c}.add({v}); }}"],
    "removeItem": ["{c}.remove({v});", "remove({v});", "{c}.remove(index);"],
    "putKey": ["{c}.put(key, {v});", "put(key, {v});", "if (key != null) {{ put(key, {w}); }}"],
    "sortItems": ["{c}.sort();", "sort({c});", "Collections.sort({c});"],
    "sumValues": ["total = total + {v};", "total += {v};", "total = {v} + {w};"],
    "countItems": ["return {c}.size();", "int n = {c}.size();"],
}

NOISE = [
    "{v} = {w};",
    'log("{s}");',
    "int {v} = {w} + 1;",
    "print({v});",
    "if ({v} > {w}) {{ return; }}",
    "while ({v} < {w}) {{ {v}++; }}",
    "for (int i = 0; i < {v}; i++) {{ update(i); }}",
    "helper({v}, {w});",
    "{c}.clear();",
    "switch ({v}) {{ case 1: print({w}); break; default: break; }}",
    "{v} = check({w});",
    "return {v};",
]

NAMES = ["value", "count", "index", "result", "data", "node", "item", "temp", "limit", "offset"]
COLLECTIONS = ["items", "list", "queue", "buffer", "entries"]
STRINGS = ["start", "done", "Add item;", "retry", "ok"]
RETURN_TYPES = ["void", "int", "boolean"]

MODEL_NAMES = ("rules-monotone", "rules-nonmonotone", "linear-bag", "edge-rule")

MODEL_CONFIGS = {
    "rules-monotone": {
        "kind": "RulePresence",
        "rules": [
            {"all_of": ["add"], "label": "addItem"},
            {"all_of": ["remove"], "label": "removeItem"},
            {"all_of": ["put", "key"], "label": "putKey"},
            {"all_of": ["sort"], "label": "sortItems"},
            {"all_of": ["size"], "label": "countItems"},
        ],
        "default_label": "misc",
    },
    "rules-nonmonotone": {
        "kind": "RulePresence",
        "rules": [
            {"all_of": ["add"], "none_of": ["size"], "label": "addItem"},
            {"all_of": ["remove"], "none_of": ["clear"], "label": "removeItem"},
            {"all_of": ["put"], "none_of": ["print"], "label": "putKey"},
            {"all_of": ["sort"], "label": "sortItems"},
        ],
        "default_label": "misc",
    },
    "linear-bag": {
        "kind": "LinearBag",
        "labels": ["addItem", "countItems", "misc", "removeItem", "sortItems"],
        "weights": {
            "addItem": {"add": 3.0, "items": 0.5, "size": -1.0},
            "removeItem": {"remove": 3.0, "index": 0.5},
            "sortItems": {"sort": 2.5, "Collections": 1.0},
            "countItems": {"size": 2.5, "return": 0.5},
            "misc": {"log": 0.5, "print": 0.5},
        },
        "bias": {"misc": 1.5},
        "temperature": 1.0,
    },
    "edge-rule": {
        "kind": "EdgeRule",
        "rules": [
            {"all_of_tokens": ["total"], "all_of_edge_kinds": ["ComputedFrom"], "label": "sumValues"},
            {"all_of_tokens": ["add"], "all_of_edge_kinds": [], "label": "addItem"},
            {"all_of_tokens": ["remove"], "all_of_edge_kinds": [], "label": "removeItem"},
        ],
        "default_label": "misc",
    },
}


def builtin_model(name: str) -> Model:
    return model_from_config(MODEL_CONFIGS[name])


def builtin_models() -> dict[str, Model]:
    return {name: builtin_model(name) for name in MODEL_NAMES}


def _fill(template: str, rng: random.Random) -> str:
    v, w = rng.sample(NAMES, 2)
    return template.format(v=v, w=w, c=rng.choice(COLLECTIONS), s=rng.choice(STRINGS))


def _program(rng: random.Random, label: str, small: bool) -> str:
    stmts = [_fill(rng.choice(SIGNALS[label]), rng)]
    if rng.random() < 0.2:
        stmts.append(_fill(rng.choice(SIGNALS[label]), rng))
    if rng.random() < 0.15:
        other = rng.choice([t for t in SIGNALS if t != label])
        stmts.append(_fill(rng.choice(SIGNALS[other]), rng))
    noise = rng.randint(0, 1) if small else rng.randint(1, 4)
    for _ in range(noise):
        stmts.insert(rng.randint(0, len(stmts)), _fill(rng.choice(NOISE), rng))
    # a return is only legal as the last statement of a straight-line body
    stmts = [s for s in stmts[:-1] if not s.startswith("return")] + stmts[-1:]
    param = rng.choice(NAMES)
    head = f"{rng.choice(RETURN_TYPES)} {label}(int {param})"
    body = "\n".join("    " + s for s in stmts)
    return f"{head} {{\n{body}\n}}\n"


def generate_corpus(n: int = 240, seed: int = 2023) -> Iterator[tuple[str, str, str]]:
    """Deterministic ``(file name, source, label)`` triples; about half are small."""
    rng = random.Random(seed)
    labels = sorted(SIGNALS)
    for i in range(n):
        label = labels[i % len(labels)]
        source = _program(rng, label, small=i % 2 == 0)
        Program.parse(source)
        yield f"p{i:03d}_{label}.mini", source, label


def write_corpus(directory: str | Path, n: int = 240, seed: int = 2023) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    labels = {}
    for name, source, label in generate_corpus(n, seed):
        (root / name).write_text(source, encoding="utf-8")
        labels[name] = label
    (root / "labels.json").write_text(json.dumps(labels, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def corpus_dir() -> Path:
    return Path(str(resources.files("wheatkit") / "data" / "corpus"))


def models_dir() -> Path:
    return Path(str(resources.files("wheatkit") / "data" / "models"))
