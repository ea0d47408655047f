"""Explanation by training data: rank same-label programs by wheat distance."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from wheatkit.errors import FragmentSearchExhausted, NoCandidates, WheatError
from wheatkit.lang.program import Program
from wheatkit.model import Model
from wheatkit.mutate import ExtractOptions, Wheat, extract_wheat
from wheatkit.verify import QueryLedger

__all__ = [
    "CACHE_ENV",
    "Corpus",
    "CorpusEntry",
    "Ranked",
    "Ranking",
    "WheatCache",
    "generate_query_corpus",
    "label_words",
    "levenshtein",
    "load_corpus",
    "rank_training",
    "rank_training_baseline",
    "wheat_distance",
]

log = logging.getLogger(__name__)

CACHE_ENV = "WHEACHA_CACHE_DIR"


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    program: Program
    label: str


@dataclass
class Corpus:
    entries: list[CorpusEntry]
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("corpus paths must be unique")
        if any(not e.label for e in self.entries):
            raise ValueError("corpus labels must be non-empty")
        self.index: dict[str, list[CorpusEntry]] = {}
        for e in self.entries:
            self.index.setdefault(e.label, []).append(e)

    def bucket(self, label: str) -> list[CorpusEntry]:
        """Entries whose label words are a subset of ``label``'s words."""
        wanted = set(label_words(label))
        return [e for e in self.entries if set(label_words(e.label)) <= wanted]


def load_corpus(directory: str | Path) -> Corpus:
    """Read ``*.mini`` files listed in ``labels.json``; unparseable files are skipped."""
    root = Path(directory)
    labels = json.loads((root / "labels.json").read_text(encoding="utf-8"))
    entries, skipped = [], []
    for path in sorted(labels):
        try:
            program = Program.parse((root / path).read_text(encoding="utf-8"))
        except (OSError, WheatError) as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped.append((path, str(exc)))
            continue
        entries.append(CorpusEntry(path, program, labels[path]))
    return Corpus(entries, skipped)


_WORD = re.compile(r"[A-Z]+(?![a-z])|[A-Z]?[a-z]+|\d+")


def label_words(label: str) -> list[str]:
    """``getItemCount`` -> ``['get', 'item', 'count']``; underscores also split."""
    return [w.lower() for part in label.split("_") for w in _WORD.findall(part)]


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def _texts(item) -> list[str]:
    if isinstance(item, Wheat):
        return [t.text for t in item.tokens]
    if isinstance(item, Program):
        return [t.text for t in item.tokens]
    return [t if isinstance(t, str) else t.text for t in item]


def wheat_distance(a, b) -> float:
    """Token edit distance normalised by the longer sequence; 0 iff identical."""
    x, y = _texts(a), _texts(b)
    longest = max(len(x), len(y))
    return levenshtein(x, y) / longest if longest else 0.0


@dataclass(frozen=True)
class Ranked:
    path: str
    distance: float
    wheat_source: str | None = None

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Ranking:
    items: tuple[Ranked, ...]
    k: int

    def to_json(self) -> list[dict]:
        return [r.to_json() for r in self.items]


class WheatCache:
    """On-disk cache of extracted wheat, keyed by program text and model."""

    def __init__(self, directory: str | Path | None = None):
        directory = directory or os.environ.get(CACHE_ENV)
        self.directory = Path(directory) if directory else None
        self._memory: dict[str, dict] = {}

    def _key(self, program: Program, model: Model, options: ExtractOptions) -> str:
        blob = json.dumps([program.source, model.id, options.max_k, options.fixpoint_cap,
                           options.header_mode.value], sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def get_or_extract(self, program: Program, model: Model, options: ExtractOptions,
                       ledger: QueryLedger | None = None) -> dict:
        key = self._key(program, model, options)
        if key in self._memory:
            return self._memory[key]
        path = self.directory / f"{key}.json" if self.directory else None
        if path is not None and path.exists():
            record = json.loads(path.read_text(encoding="utf-8"))
        else:
            try:
                wheat = extract_wheat(program, model, options, ledger)
                record = {"wheat_source": wheat.source, "tokens": [t.text for t in wheat.tokens]}
            except FragmentSearchExhausted:
                record = {"wheat_source": None, "tokens": None}
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(record), encoding="utf-8")
        self._memory[key] = record
        return record


def _rank(scored: Iterable[Ranked], k: int) -> Ranking:
    ordered = sorted(scored, key=lambda r: (r.distance, r.path))
    return Ranking(tuple(ordered[:k]), k)


def rank_training(test_wheat: Wheat, corpus: Corpus, label: str, k: int, model: Model,
                  ledger: QueryLedger | None = None, options: ExtractOptions | None = None,
                  cache: WheatCache | None = None) -> Ranking:
    """Same-label corpus programs ordered by distance between their wheat and ``test_wheat``.

    Entries whose wheat cannot be extracted are left out.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    bucket = corpus.bucket(label)
    if not bucket:
        raise NoCandidates(label)
    options = options or ExtractOptions()
    cache = cache or WheatCache()
    target = _texts(test_wheat)
    scored = []
    for entry in bucket:
        record = cache.get_or_extract(entry.program, model, options, ledger)
        if record["tokens"] is None:
            continue
        scored.append(Ranked(entry.path, wheat_distance(target, record["tokens"]), record["wheat_source"]))
    return _rank(scored, k)


def rank_training_baseline(test_program: Program, corpus: Corpus, label: str, k: int) -> Ranking:
    """Same bucket, ranked by distance between whole programs; no model queries."""
    if k < 1:
        raise ValueError("k must be at least 1")
    bucket = corpus.bucket(label)
    if not bucket:
        raise NoCandidates(label)
    return _rank((Ranked(e.path, wheat_distance(test_program, e.program)) for e in bucket), k)


def generate_query_corpus(program: Program, model: Model, options: ExtractOptions | None = None) -> list[Program]:
    """Every distinct program the model was asked about while extracting, in visit order."""
    options = options or ExtractOptions()
    ledger = QueryLedger()
    try:
        extract_wheat(program, model, ExtractOptions(options.max_k, options.fixpoint_cap, options.header_mode, 1),
                      ledger)
    except FragmentSearchExhausted:
        pass
    return [Program.parse(source) for source in ledger.visited]
