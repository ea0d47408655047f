"""Command line interface."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, TextIO

from wheatkit.analysis import (DEFAULT_GRID, aggregate_coverage, classify_wheat, covered_positions,
                               load_scores, occlusion_attribution)
from wheatkit.corpus import MODEL_NAMES, builtin_model
from wheatkit.dd_baseline import ddmin_wheat
from wheatkit.errors import (FragmentSearchExhausted, LexError, NoCandidates, NoProbabilities, ParseError,
                             ParseFailed, ProtocolError, TokenLimitExceeded, WheatError)
from wheatkit.explain import WheatCache, generate_query_corpus, load_corpus, rank_training, rank_training_baseline
from wheatkit.lang.program import Program
from wheatkit.model import DEFAULT_TIMEOUT, Model, load_model, serve
from wheatkit.mutate import DEFAULT_FIXPOINT_CAP, ExtractOptions, Wheat, extract_wheat
from wheatkit.oracle import DEFAULT_TOKEN_LIMIT, brute_force_check, enumeration_count
from wheatkit.reduce import DEFAULT_MAX_K
from wheatkit.verify import Checker, HeaderMode, QueryLedger

__all__ = ["main", "build_parser", "wheat_report"]

log = logging.getLogger("wheatkit")

EXIT_OK, EXIT_ERRORS, EXIT_USAGE, EXIT_PROTOCOL, EXIT_EXHAUSTED, EXIT_PARSE = 0, 1, 2, 3, 4, 5


@dataclass
class Settings:
    model: str | None = None
    max_k: int = DEFAULT_MAX_K
    fixpoint_cap: int = DEFAULT_FIXPOINT_CAP
    header_mode: HeaderMode = HeaderMode.MASK_NAME
    oracle_token_limit: int = DEFAULT_TOKEN_LIMIT
    top_pct: tuple[float, ...] = DEFAULT_GRID
    jobs: int = 1
    timeout: float = DEFAULT_TIMEOUT

    @property
    def options(self) -> ExtractOptions:
        return ExtractOptions(self.max_k, self.fixpoint_cap, self.header_mode, self.jobs)


def _settings(args: argparse.Namespace) -> Settings:
    s = Settings()
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key, value in data.items():
            key = key.replace("-", "_")
            if key == "header_mode":
                value = HeaderMode(value)
            elif key == "top_pct":
                value = tuple(float(x) for x in value)
            elif key == "model" and isinstance(value, dict):
                value = json.dumps(value)
            if not hasattr(s, key):
                raise ValueError(f"unknown config key: {key}")
            setattr(s, key, value)
    for key in ("model", "max_k", "fixpoint_cap", "oracle_token_limit", "jobs", "timeout"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(s, key, value)
    if getattr(args, "header_mode", None):
        s.header_mode = HeaderMode(args.header_mode)
    if getattr(args, "top_pct", None):
        s.top_pct = tuple(float(x) for x in args.top_pct.split(","))
    return s


def resolve_model(spec: str | None, timeout: float = DEFAULT_TIMEOUT) -> Model:
    """``exec:<cmd>``, a JSON config path, inline JSON, or a built-in model name."""
    if not spec:
        raise ValueError("no model given (use --model)")
    if spec.startswith("exec:") or Path(spec).is_file():
        return load_model(spec, timeout)
    if spec.lstrip().startswith("{"):
        return load_model(json.loads(spec))
    if spec in MODEL_NAMES:
        return builtin_model(spec)
    raise ValueError(f"unknown model: {spec}")


def iter_programs(path: str | Path) -> Iterator[tuple[str, Program | Exception]]:
    """``(display path, program or the error that prevented parsing)``, in a stable order."""
    root = Path(path)
    if root.is_dir():
        labels = root / "labels.json"
        names = sorted(json.loads(labels.read_text(encoding="utf-8"))) if labels.exists() \
            else sorted(p.name for p in root.glob("*.mini"))
        for name in names:
            yield from _one(root / name, name)
    else:
        yield from _one(root, str(path))


def _one(file: Path, shown: str) -> Iterator[tuple[str, Program | Exception]]:
    try:
        yield shown, Program.parse(file.read_text(encoding="utf-8"))
    except (OSError, LexError, ParseError) as exc:
        yield shown, exc


def wheat_report(path: str, wheat: Wheat, elapsed_ms: float) -> dict[str, Any]:
    return {
        "program_path": path,
        "label": wheat.label,
        "wheat_source": wheat.source,
        "wheat_tokens": [t.text for t in wheat.tokens],
        "wheat_positions": wheat.positions,
        "token_count": wheat.token_count,
        "fragment_k": wheat.fragment_k,
        "queries": wheat.queries,
        "elapsed_ms": round(elapsed_ms, 3),
        "oov_substitutions": [{"node": i, "original": v} for i, v in wheat.oov_substitutions],
    }


def underline(program: Program, positions) -> str:
    """The original source with ``^`` marks under the given token positions."""
    marks: dict[int, list[tuple[int, int]]] = {}
    starts = [0]
    for i, ch in enumerate(program.source):
        if ch == "\n":
            starts.append(i + 1)
    for pos in positions:
        tok = program.tokens[pos]
        line = max(i for i, s in enumerate(starts) if s <= tok.offset)
        marks.setdefault(line, []).append((tok.offset - starts[line], len(tok.text)))
    out = []
    for n, text in enumerate(program.source.rstrip("\n").split("\n")):
        out.append(text)
        if n in marks:
            row = [" "] * len(text)
            for col, width in marks[n]:
                row[col:col + width] = "^" * width
            out.append("".join(row).rstrip())
    return "\n".join(out)


class _Emitter:
    def __init__(self, out: TextIO, fmt: str):
        self.out = out
        self.fmt = fmt
        self.errors = 0

    def json(self, obj: Any) -> None:
        self.out.write(json.dumps(obj, sort_keys=True) + "\n")
        self.out.flush()

    def text(self, text: str) -> None:
        self.out.write(text.rstrip("\n") + "\n")

    def error(self, path: str, exc: BaseException) -> None:
        self.errors += 1
        print(f"{path}: {type(exc).__name__}: {exc}", file=sys.stderr)


def _exit_for(exc: BaseException) -> int:
    if isinstance(exc, ProtocolError):
        return EXIT_PROTOCOL
    if isinstance(exc, FragmentSearchExhausted):
        return EXIT_EXHAUSTED
    if isinstance(exc, (LexError, ParseError, ParseFailed)):
        return EXIT_PARSE
    return EXIT_ERRORS


def _for_each(args, emit: _Emitter, body: Callable[[str, Program], None]) -> int:
    """Run ``body`` per program; a lone file maps its error to a specific exit code."""
    items = list(iter_programs(args.path))
    single = not Path(args.path).is_dir()
    for path, program in items:
        if isinstance(program, Exception):
            emit.error(path, program)
            if single:
                return _exit_for(program)
            continue
        try:
            body(path, program)
        except ProtocolError as exc:
            emit.error(path, exc)
            return EXIT_PROTOCOL
        except WheatError as exc:
            emit.error(path, exc)
            if single:
                return _exit_for(exc)
    if emit.errors and not single:
        print(f"{emit.errors} of {len(items)} programs reported errors", file=sys.stderr)
    return EXIT_ERRORS if emit.errors else EXIT_OK


# commands ----------------------------------------------------------------

def cmd_extract(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    def one(path: str, program: Program) -> None:
        start = time.perf_counter()
        wheat = extract_wheat(program, model, settings.options)
        report = wheat_report(path, wheat, (time.perf_counter() - start) * 1000)
        if emit.fmt == "json":
            emit.json(report)
        else:
            emit.text(f"{path}: label {wheat.label}, wheat of {wheat.token_count} tokens "
                      f"(fragment k={wheat.fragment_k}, {wheat.queries} queries)")
            emit.text(underline(program, wheat.positions))
            emit.text("wheat:\n" + wheat.source + "\n")
    return _for_each(args, emit, one)


def cmd_dd(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    def one(path: str, program: Program) -> None:
        result, trace = ddmin_wheat(program, model, header_mode=settings.header_mode)
        report = {"program_path": path, "label": result.label, "wheat_source": result.source,
                  "token_count": result.token_count, "queries": result.queries, **trace.to_json()}
        if emit.fmt == "json":
            emit.json(report)
        else:
            emit.text(f"{path}: label {result.label}")
            width = max((len(s.partition) for s in trace.steps), default=4)
            for i, step in enumerate(trace.steps, 1):
                emit.text(f"{i:>4}  {step.partition:<{width}}  {step.unsatisfied:<10}  {' '.join(step.tokens)}")
            emit.text(f"result ({result.token_count} tokens):\n{result.source}\n")
    return _for_each(args, emit, one)


def cmd_oracle(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    def one(path: str, program: Program) -> None:
        ledger = QueryLedger()
        wheat = extract_wheat(program, model, settings.options, ledger)
        result = brute_force_check(program, model, wheat, args.size_cap, ledger, settings.oracle_token_limit,
                                   settings.header_mode, settings.jobs)
        report = {
            "program_path": path,
            "label": wheat.label,
            "wheat_source": wheat.source,
            "token_count": wheat.token_count,
            "status": "confirmed_minimal" if result.confirmed_minimal else "smaller_found",
            "enumerated": result.enumerated,
            "enumeration_count": enumeration_count(len(program.body_units), wheat.token_count, args.size_cap),
            "smaller_source": result.smaller_source,
            "smaller_token_count": result.smaller_token_count,
        }
        if emit.fmt == "json":
            emit.json(report)
        else:
            emit.text(f"{path}: {report['status']} ({result.enumerated} of {report['enumeration_count']} "
                      f"candidates tried, wheat {wheat.token_count} tokens)")
    return _for_each(args, emit, one)


def cmd_classify(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    counts = {"Lexical": 0, "Syntactic": 0, "Semantic": 0}

    def one(path: str, program: Program) -> None:
        checker = Checker(program, model, None, settings.header_mode)
        wheat = extract_wheat(program, model, settings.options, checker.ledger)
        cls = classify_wheat(wheat, checker)
        counts[cls.value] += 1
        if args.per_program:
            emit.json({"program_path": path, "class": cls.value, "wheat_source": wheat.source})

    code = _for_each(args, emit, one)
    total = sum(counts.values())
    rows = {k: (100.0 * v / total if total else 0.0) for k, v in counts.items()}
    summary = {"programs": total, "counts": counts, "percent": rows}
    if emit.fmt == "json":
        emit.json(summary)
    else:
        emit.text("  ".join(f"{k}: {v:.1f}%" for k, v in rows.items()) + f"  (n={total})")
    return code


def cmd_coverage(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    per_program: list[dict[float, bool]] = []

    def one(path: str, program: Program) -> None:
        wheat = extract_wheat(program, model, settings.options)
        scores = load_scores(args.scores).scores if args.scores else occlusion_attribution(program, model).scores
        if len(scores) != len(program.tokens):
            raise WheatError(f"{len(scores)} scores for {len(program.tokens)} tokens")
        per_program.append({p: covered_positions(scores, wheat.positions, p) for p in settings.top_pct})

    try:
        code = _for_each(args, emit, one)
    except NoProbabilities as exc:
        emit.error(args.path, exc)
        return EXIT_ERRORS
    table = aggregate_coverage(per_program, settings.top_pct)
    report = {"programs": len(per_program), "source": "External" if args.scores else "Occlusion",
              "coverage": {_pct_key(p): v for p, v in table.items()}}
    if emit.fmt == "json":
        emit.json(report)
    else:
        emit.text("  ".join(f"top {_pct_key(p)}%: {100 * v:.1f}%" for p, v in table.items()))
    return code


def _pct_key(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else str(p)


def cmd_explain(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    items = list(iter_programs(args.path))
    if len(items) != 1:
        raise ValueError("explain takes a single program file")
    path, program = items[0]
    if isinstance(program, Exception):
        emit.error(path, program)
        return _exit_for(program)
    corpus = load_corpus(args.corpus)
    wheat = extract_wheat(program, model, settings.options)
    label = args.label or wheat.label
    cache = WheatCache(args.cache_dir)
    wheat_rank = rank_training(wheat, corpus, label, args.k, model, None, settings.options, cache)
    baseline = rank_training_baseline(program, corpus, label, args.k)
    report = {"program_path": path, "label": label, "wheat_source": wheat.source,
              "wheat": wheat_rank.to_json(), "baseline": baseline.to_json()}
    if emit.fmt == "json":
        emit.json(report)
    else:
        emit.text(f"{path}: label {label}; wheat:\n{wheat.source}")
        emit.text("by wheat distance:")
        for r in wheat_rank.items:
            emit.text(f"  {r.distance:.3f}  {r.path}")
        emit.text("by whole-program distance:")
        for r in baseline.items:
            emit.text(f"  {r.distance:.3f}  {r.path}")
    return EXIT_ERRORS if corpus.skipped else EXIT_OK


def cmd_gen_queries(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(path: str, program: Program) -> None:
        stem = Path(path).stem
        queries = generate_query_corpus(program, model, settings.options)
        for i, q in enumerate(queries):
            (out_dir / f"{stem}_q{i:04d}.mini").write_text(q.source if q.source.endswith("\n") else q.source + "\n",
                                                           encoding="utf-8")
        if emit.fmt == "json":
            emit.json({"program_path": path, "queries": len(queries), "out_dir": str(out_dir)})
        else:
            emit.text(f"{path}: {len(queries)} programs written to {out_dir}")
    return _for_each(args, emit, one)


def cmd_model_serve(args, settings: Settings, model: Model, emit: _Emitter) -> int:
    serve(model)
    return EXIT_OK


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wheatkit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, path: bool = True) -> None:
        if path:
            p.add_argument("path", help="a .mini file or a corpus directory")
        p.add_argument("--model", help="config JSON, exec:<command>, or a built-in name: " + ", ".join(MODEL_NAMES))
        p.add_argument("--config", help="JSON settings file; flags override it")
        p.add_argument("--max-k", type=int, dest="max_k")
        p.add_argument("--fixpoint-cap", type=int, dest="fixpoint_cap")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--mask-name", action="store_const", const="mask-name", dest="header_mode")
        mode.add_argument("--keep-header", action="store_const", const="keep-header", dest="header_mode")
        p.add_argument("--jobs", type=int)
        p.add_argument("--timeout", type=float, help="seconds to wait for an external model reply")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "text"), default="json")

    p = sub.add_parser("extract", help="extract the wheat")
    common(p)
    p = sub.add_parser("dd", help="delta debugging baseline with trace")
    common(p)
    p = sub.add_parser("oracle", help="brute-force minimality check")
    common(p)
    p.add_argument("--oracle-token-limit", type=int, dest="oracle_token_limit")
    p.add_argument("--size-cap", type=int, dest="size_cap")
    p = sub.add_parser("classify", help="lexical/syntactic/semantic breakdown")
    common(p)
    p.add_argument("--per-program", action="store_true")
    p = sub.add_parser("coverage", help="top-N%% attribution coverage of the wheat")
    common(p)
    p.add_argument("--top-pct", dest="top_pct", help="comma-separated grid, default 10,30,50,70,90")
    p.add_argument("--scores", help="JSON array of per-token scores (single program)")
    p = sub.add_parser("explain", help="rank training programs by wheat distance")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--label")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--cache-dir", dest="cache_dir")
    p = sub.add_parser("gen-queries", help="write every program queried during extraction")
    common(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p = sub.add_parser("model-serve", help="serve a built-in model over the JSON-lines protocol")
    common(p, path=False)
    return parser


COMMANDS = {
    "extract": cmd_extract, "dd": cmd_dd, "oracle": cmd_oracle, "classify": cmd_classify,
    "coverage": cmd_coverage, "explain": cmd_explain, "gen-queries": cmd_gen_queries,
    "model-serve": cmd_model_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = _settings(args)
        model = resolve_model(settings.model, settings.timeout)
    except (ValueError, OSError) as exc:
        print(f"wheatkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = open(args.out, "w", encoding="utf-8") if getattr(args, "out", None) else sys.stdout
    try:
        emit = _Emitter(out, getattr(args, "format", "json"))
        return COMMANDS[args.command](args, settings, model, emit)
    except ProtocolError as exc:
        print(f"wheatkit: ProtocolError: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except (NoCandidates, TokenLimitExceeded, ValueError) as exc:
        print(f"wheatkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERRORS
    finally:
        model.close()
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
