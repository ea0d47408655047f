"""Wheat taxonomy, occlusion attribution and top-N% coverage."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from wheatkit.errors import NoProbabilities, ParseFailed
from wheatkit.lang.edges import augment
from wheatkit.lang.printer import serialize
from wheatkit.lang.program import Program
from wheatkit.lang.syntax import Kind
from wheatkit.lang.surgery import OOV
from wheatkit.lang.tokens import tokenize
from wheatkit.model import EdgeRule, Model
from wheatkit.mutate import Wheat
from wheatkit.verify import Checker

__all__ = [
    "AttributionScores",
    "CoverageResult",
    "DEFAULT_GRID",
    "WheatClass",
    "aggregate_coverage",
    "classify_wheat",
    "coverage",
    "covered_positions",
    "load_scores",
    "occlusion_attribution",
    "top_positions",
]

DEFAULT_GRID = (10, 30, 50, 70, 90)


class WheatClass(str, Enum):
    LEXICAL = "Lexical"
    SYNTACTIC = "Syntactic"
    SEMANTIC = "Semantic"


def classify_wheat(wheat: Wheat, checker: Checker) -> WheatClass:
    """Semantic if the wheat stops being sufficient once its edges are removed.

    Only edge-aware models can be Semantic; for the others the test is
    inert.  Otherwise a wheat made only of bare identifiers is Lexical.
    """
    model = checker.model
    if isinstance(model, EdgeRule):
        tree = checker.suff_tree(wheat.ast)
        graph = augment(tree)
        tokens = tokenize(serialize(tree))
        with_edges = model.predict_augmented(graph, tokens).label == checker.label
        without = model.predict_augmented(graph.stripped(), tokens).label == checker.label
        if with_edges and not without:
            return WheatClass.SEMANTIC
    stmts = wheat.ast.children
    if stmts and all(s.kind is Kind.EXPR_STMT and s.children[0].kind is Kind.IDENTIFIER for s in stmts):
        return WheatClass.LEXICAL
    return WheatClass.SYNTACTIC


@dataclass(frozen=True)
class AttributionScores:
    scores: tuple[float, ...]
    source: str = "Occlusion"

    def __len__(self) -> int:
        return len(self.scores)


def occlusion_attribution(program: Program, model: Model) -> AttributionScores:
    """Drop in the original label's probability when token i becomes ``oov``.

    A replacement that no longer parses scores 0: the model gives no
    answer to compare against.
    """
    base = model.predict(program.source)
    if base.probs is None:
        raise NoProbabilities(f"{model.kind} does not report probabilities")
    p0 = base.probs.get(base.label, 0.0)
    texts = [t.text for t in program.tokens]
    scores = []
    for i in range(len(texts)):
        variant = " ".join(texts[:i] + [OOV] + texts[i + 1:])
        try:
            pred = model.predict(variant)
        except ParseFailed:
            scores.append(0.0)
            continue
        if pred.probs is None:
            raise NoProbabilities(f"{model.kind} does not report probabilities")
        scores.append(p0 - pred.probs.get(base.label, 0.0))
    return AttributionScores(tuple(scores), "Occlusion")


def load_scores(path: str | Path) -> AttributionScores:
    """Externally computed scores: a JSON array index-aligned to token positions."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list) or not all(isinstance(x, (int, float)) for x in data):
        raise ValueError("scores file must be a JSON array of numbers")
    return AttributionScores(tuple(float(x) for x in data), "External")


def top_positions(scores: Sequence[float], top_pct: float) -> list[int]:
    """The ceil(top_pct% * n) best positions; ties go to the lower position."""
    n = len(scores)
    k = math.ceil(Fraction(str(top_pct)) * n / 100)
    return sorted(range(n), key=lambda i: (-scores[i], i))[:k]


def covered_positions(scores: Sequence[float], positions: Iterable[int], top_pct: float) -> bool:
    chosen = set(top_positions(scores, top_pct))
    return all(p in chosen for p in positions)


@dataclass(frozen=True)
class CoverageResult:
    top_pct: float
    covered: bool


def coverage(scores: AttributionScores | Sequence[float], wheat: Wheat, program: Program,
             top_pct: float) -> CoverageResult:
    values = scores.scores if isinstance(scores, AttributionScores) else tuple(scores)
    if len(values) != len(program.tokens):
        raise ValueError(f"{len(values)} scores for {len(program.tokens)} tokens")
    return CoverageResult(top_pct, covered_positions(values, wheat.positions, top_pct))


def aggregate_coverage(per_program: Iterable[Mapping[float, bool]],
                       grid: Sequence[float] = DEFAULT_GRID) -> dict[float, float]:
    """Fraction of programs fully covered, for each top_pct in ``grid``."""
    rows = list(per_program)
    if not rows:
        return {pct: 0.0 for pct in grid}
    return {pct: sum(1 for r in rows if r[pct]) / len(rows) for pct in grid}
