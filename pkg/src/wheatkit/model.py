"""Black-box models: deterministic built-ins and an external-process adapter.

Every model maps a source string to a :class:`Prediction`.  Built-in models
look only at Identifier and Keyword tokens (string literals never count),
but still insist that the source parses, as a real code model would.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import queue
import shlex
import subprocess
import sys
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Any, Iterable, Mapping

from wheatkit.errors import LexError, ParseError, ParseFailed, ProtocolError
from wheatkit.lang.edges import AugmentedAst, EdgeKind, augment
from wheatkit.lang.syntax import parse_tokens
from wheatkit.lang.tokens import Token, TokenKind, tokenize

__all__ = [
    "EdgeRule",
    "EdgeRuleSpec",
    "External",
    "LinearBag",
    "Model",
    "Prediction",
    "Rule",
    "RulePresence",
    "load_model",
    "model_from_config",
    "rule_tokens",
    "serve",
]

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class Prediction:
    label: str
    probs: Mapping[str, float] | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"label": self.label}
        if self.probs is not None:
            out["probs"] = dict(self.probs)
        return out

    @classmethod
    def from_json(cls, data: Any) -> "Prediction":
        if not isinstance(data, dict) or not isinstance(data.get("label"), str):
            raise ProtocolError(f"malformed reply: {data!r}")
        probs = data.get("probs")
        if probs is not None:
            if not isinstance(probs, dict) or not all(
                    isinstance(k, str) and isinstance(v, (int, float)) for k, v in probs.items()):
                raise ProtocolError(f"malformed probs: {probs!r}")
            probs = {k: float(v) for k, v in probs.items()}
        return cls(data["label"], probs)


def _lex_and_parse(source: str) -> list[Token]:
    try:
        tokens = tokenize(source)
        parse_tokens(tokens)
    except (LexError, ParseError) as exc:
        raise ParseFailed(str(exc)) from exc
    return tokens


def rule_tokens(tokens: Iterable[Token]) -> list[str]:
    """Texts a built-in model can see: identifiers and keywords only."""
    return [t.text for t in tokens if t.kind in (TokenKind.IDENTIFIER, TokenKind.KEYWORD)]


class Model(ABC):
    kind: str = ""
    concurrency_safe: bool = True

    @property
    @abstractmethod
    def config(self) -> dict[str, Any]:
        ...

    @cached_property
    def id(self) -> str:
        blob = json.dumps(self.config, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @abstractmethod
    def predict(self, source: str) -> Prediction:
        ...

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _check_no_oov(texts: Iterable[str]) -> None:
    if "oov" in texts:
        raise ValueError('"oov" is reserved and cannot appear in a model config')


@dataclass(frozen=True)
class Rule:
    all_of: frozenset[str]
    label: str
    none_of: frozenset[str] = frozenset()

    def fires(self, seen: set[str]) -> bool:
        return self.all_of <= seen and not (self.none_of & seen)


class RulePresence(Model):
    kind = "RulePresence"

    def __init__(self, rules: Iterable[Rule], default_label: str):
        self.rules = tuple(rules)
        self.default_label = default_label
        for r in self.rules:
            if not r.label:
                raise ValueError("rule labels must be non-empty")
            _check_no_oov(r.all_of | r.none_of)
        if not default_label:
            raise ValueError("default label must be non-empty")

    @property
    def monotone(self) -> bool:
        return all(not r.none_of for r in self.rules)

    @property
    def config(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "rules": [{"all_of": sorted(r.all_of), "none_of": sorted(r.none_of), "label": r.label} for r in self.rules],
            "default_label": self.default_label,
        }

    def classify(self, seen: set[str]) -> str:
        return next((r.label for r in self.rules if r.fires(seen)), self.default_label)

    def predict(self, source: str) -> Prediction:
        seen = set(rule_tokens(_lex_and_parse(source)))
        label = self.classify(seen)
        return Prediction(label, {label: 1.0})


class LinearBag(Model):
    """Bag-of-tokens linear scorer with a softmax on top."""

    kind = "LinearBag"

    def __init__(self, labels: Iterable[str], weights: Mapping[tuple[str, str], float],
                 bias: Mapping[str, float] | None = None, temperature: float = 1.0):
        self.labels = tuple(labels)
        self.weights = dict(weights)
        self.bias = dict(bias or {})
        self.temperature = float(temperature)
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        known = set(self.labels)
        if not known or any(lbl not in known for _, lbl in self.weights) or any(lbl not in known for lbl in self.bias):
            raise ValueError("every label in weights/bias must be declared")
        _check_no_oov(tok for tok, _ in self.weights)

    @property
    def config(self) -> dict[str, Any]:
        nested: dict[str, dict[str, float]] = {}
        for (tok, lbl), w in sorted(self.weights.items()):
            nested.setdefault(lbl, {})[tok] = w
        return {"kind": self.kind, "labels": list(self.labels), "weights": nested,
                "bias": dict(sorted(self.bias.items())), "temperature": self.temperature}

    def scores(self, texts: Iterable[str]) -> dict[str, float]:
        out = {lbl: self.bias.get(lbl, 0.0) for lbl in self.labels}
        for text in texts:
            for lbl in self.labels:
                out[lbl] += self.weights.get((text, lbl), 0.0)
        return out

    def predict(self, source: str) -> Prediction:
        scores = self.scores(rule_tokens(_lex_and_parse(source)))
        top = max(scores.values())
        exp = {lbl: math.exp((s - top) / self.temperature) for lbl, s in scores.items()}
        total = sum(exp.values())
        probs = {lbl: v / total for lbl, v in exp.items()}
        # ties go to the lexicographically smallest label
        label = min(self.labels, key=lambda lbl: (-scores[lbl], lbl))
        return Prediction(label, probs)


@dataclass(frozen=True)
class EdgeRuleSpec:
    all_of_tokens: frozenset[str]
    label: str
    all_of_edge_kinds: frozenset[EdgeKind] = field(default_factory=frozenset)


class EdgeRule(Model):
    """Rule model that can also demand semantic edge kinds in the parsed tree."""

    kind = "EdgeRule"

    def __init__(self, rules: Iterable[EdgeRuleSpec], default_label: str):
        self.rules = tuple(rules)
        self.default_label = default_label
        for r in self.rules:
            if not r.label:
                raise ValueError("rule labels must be non-empty")
            _check_no_oov(r.all_of_tokens)

    @property
    def config(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "rules": [{"all_of_tokens": sorted(r.all_of_tokens),
                       "all_of_edge_kinds": sorted(k.value for k in r.all_of_edge_kinds),
                       "label": r.label} for r in self.rules],
            "default_label": self.default_label,
        }

    def predict_augmented(self, graph: AugmentedAst, tokens: Iterable[Token]) -> Prediction:
        seen = set(rule_tokens(tokens))
        kinds = graph.edge_kinds
        for r in self.rules:
            if r.all_of_tokens <= seen and r.all_of_edge_kinds <= kinds:
                return Prediction(r.label, {r.label: 1.0})
        return Prediction(self.default_label, {self.default_label: 1.0})

    def predict(self, source: str) -> Prediction:
        try:
            tokens = tokenize(source)
            tree = parse_tokens(tokens)
        except (LexError, ParseError) as exc:
            raise ParseFailed(str(exc)) from exc
        return self.predict_augmented(augment(tree), tokens)


class External(Model):
    """Adapter for a model living in a subprocess (line-delimited JSON).

    Requests are serialized over the single pipe, so the adapter is not
    concurrency safe.  A timeout, a crash or a garbled reply all surface
    as :class:`ProtocolError`.
    """

    kind = "External"
    concurrency_safe = False

    def __init__(self, command: str | list[str], timeout: float = DEFAULT_TIMEOUT):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._replies: queue.Queue = queue.Queue()
        self._lock = threading.Lock()

    @property
    def config(self) -> dict[str, Any]:
        return {"kind": self.kind, "command": self.command}

    def _start(self) -> subprocess.Popen:
        if self._proc is None:
            try:
                self._proc = subprocess.Popen(
                    self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL, text=True, encoding="utf-8", bufsize=1,
                )
            except OSError as exc:
                raise ProtocolError(f"cannot start external model {self.command!r}: {exc}") from exc
            threading.Thread(target=self._pump, args=(self._proc.stdout,), daemon=True).start()
        return self._proc

    def _pump(self, stream: IO[str]) -> None:
        for line in stream:
            self._replies.put(line)
        self._replies.put(None)

    def predict(self, source: str) -> Prediction:
        with self._lock:
            proc = self._start()
            try:
                proc.stdin.write(json.dumps({"program": source}) + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ProtocolError(f"external model is gone: {exc}") from exc
            try:
                line = self._replies.get(timeout=self.timeout)
            except queue.Empty:
                self._kill()
                raise ProtocolError(f"no reply within {self.timeout} s") from None
            if line is None:
                self._replies.put(None)
                raise ProtocolError("external model closed its output")
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"reply is not JSON: {line!r}") from exc
        if isinstance(data, dict) and "error" in data:
            if data.get("error") == "parse":
                raise ParseFailed(data.get("message", "external model could not parse the program"))
            raise ProtocolError(f"external model error: {data['error']}")
        return Prediction.from_json(data)

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
            self._replies = queue.Queue()

    def close(self) -> None:
        with self._lock:
            if self._proc is not None:
                try:
                    self._proc.stdin.close()
                    self._proc.wait(timeout=5)
                except (OSError, subprocess.TimeoutExpired):
                    self._proc.kill()
                self._proc = None


def serve(model: Model, stdin: IO[str] | None = None, stdout: IO[str] | None = None,
          stderr: IO[str] | None = None) -> int:
    """Answer protocol requests on ``stdin`` until it closes; returns the request count."""
    if isinstance(model, External):
        raise ValueError("an external model cannot be served")
    stdin, stdout, stderr = stdin or sys.stdin, stdout or sys.stdout, stderr or sys.stderr
    count = 0
    for line in stdin:
        if not line.strip():
            continue
        count += 1
        try:
            request = json.loads(line)
            if not isinstance(request, dict) or not isinstance(request.get("program"), str):
                raise ValueError("missing program")
        except ValueError:
            print(f"bad request: {line.strip()[:80]}", file=stderr)
            reply: dict[str, Any] = {"error": "bad request"}
        else:
            try:
                reply = model.predict(request["program"]).to_json()
            except ParseFailed as exc:
                reply = {"error": "parse", "message": str(exc)}
        stdout.write(json.dumps(reply, sort_keys=True) + "\n")
        stdout.flush()
    return count


def model_from_config(config: Mapping[str, Any]) -> Model:
    kind = config.get("kind")
    if kind == "RulePresence":
        rules = [Rule(frozenset(r.get("all_of", ())), r["label"], frozenset(r.get("none_of", ())))
                 for r in config.get("rules", ())]
        return RulePresence(rules, config["default_label"])
    if kind == "LinearBag":
        weights = {(tok, lbl): float(w) for lbl, row in config.get("weights", {}).items() for tok, w in row.items()}
        return LinearBag(config["labels"], weights, config.get("bias"), config.get("temperature", 1.0))
    if kind == "EdgeRule":
        rules = [EdgeRuleSpec(frozenset(r.get("all_of_tokens", ())), r["label"],
                              frozenset(EdgeKind(k) for k in r.get("all_of_edge_kinds", ())))
                 for r in config.get("rules", ())]
        return EdgeRule(rules, config["default_label"])
    if kind == "External":
        return External(config["command"], config.get("timeout", DEFAULT_TIMEOUT))
    raise ValueError(f"unknown model kind: {kind!r}")


def load_model(spec: str | Path | Mapping[str, Any], timeout: float = DEFAULT_TIMEOUT) -> Model:
    """Build a model from a config mapping, a JSON file path, or ``exec:<command>``."""
    if isinstance(spec, Mapping):
        return model_from_config(spec)
    text = str(spec)
    if text.startswith("exec:"):
        return External(text[len("exec:"):], timeout)
    with open(text, encoding="utf-8") as fh:
        return model_from_config(json.load(fh))
