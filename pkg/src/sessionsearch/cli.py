"""Command-line entry point: index, run, tune, and eval subcommands.

All outputs are deterministic for a given set of inputs and arguments, so
repeating an invocation reproduces its files byte for byte. Parameter
precedence is CLI flag over config file over built-in default, and the
effective configuration is embedded in every report.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import evalkit, pipeline
from .index import InvertedIndex, build_index, read_corpus_jsonl
from .session import load_sessions

logger = logging.getLogger("sessionsearch")

_CONFIG_ALIASES = {"lambda": "lam", "clip": "clip_terms"}
_INT_FIELDS = frozenset({"m", "clip_terms", "depth", "k"})
_FLOAT_FIELDS = frozenset({"lam", "gamma", "mu", "decay"})
_TUNABLE_FIELDS = frozenset({"m", "lam", "gamma", "mu", "decay", "clip_terms"})


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _require_file(path: str, role: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise FileNotFoundError(f"{role} file not found: {path}")
    return resolved


def _coerce(field_name: str, value):
    if field_name == "method":
        if not isinstance(value, str):
            raise ValueError(f"config field 'method' must be a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"config field {field_name!r} must be a number, got {value!r}")
    if field_name in _INT_FIELDS:
        if float(value) != int(value):
            raise ValueError(f"config field {field_name!r} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _load_config_file(path: str, allow_grids: bool) -> tuple[dict, dict]:
    """Read a JSON config; returns (scalar values, grid lists)."""
    with open(_require_file(path, "config"), "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(pipeline.RunConfig)}
    scalars: dict = {}
    grids: dict = {}
    for key, value in raw.items():
        field_name = _CONFIG_ALIASES.get(key, key)
        if field_name not in known:
            raise ValueError(f"{path}: unknown config field {key!r}")
        if isinstance(value, list):
            if not allow_grids:
                raise ValueError(f"{path}: field {key!r} is a list; grids are for tune only")
            if field_name not in _TUNABLE_FIELDS:
                raise ValueError(f"{path}: field {key!r} cannot be tuned over")
            grids[field_name] = [_coerce(field_name, item) for item in value]
        else:
            scalars[field_name] = _coerce(field_name, value)
    return scalars, grids


def _effective_config(args, file_scalars: dict) -> pipeline.RunConfig:
    values = dataclasses.asdict(pipeline.RunConfig())
    values.update(file_scalars)
    for field_name in values:
        cli_value = getattr(args, field_name, None)
        if cli_value is not None:
            values[field_name] = cli_value
    return pipeline.RunConfig(**values)


def _parse_value_list(field_name: str, text: str) -> list:
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        values.append(_coerce(field_name, int(chunk) if field_name in _INT_FIELDS else float(chunk)))
    if not values:
        raise ValueError(f"empty value list for {field_name!r}: {text!r}")
    return values


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=pipeline.METHODS, default=None,
                        help="scoring method (default none: plain query likelihood)")
    parser.add_argument("--k", type=int, default=None, help="cutoff for @k metrics")
    parser.add_argument("--depth", type=int, default=None, help="initial retrieval depth")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="feedback interpolation weight")
    parser.add_argument("--gamma", type=float, default=None, help="history retention weight")
    parser.add_argument("--m", type=int, default=None, help="feedback document count")
    parser.add_argument("--mu", type=float, default=None, help="Dirichlet smoothing pseudo-count")
    parser.add_argument("--clip", dest="clip_terms", type=int, default=None,
                        help="keep only this many top model terms")
    parser.add_argument("--decay", type=float, default=None,
                        help="per-step query weight decay for qa-decay")
    parser.add_argument("--config", default=None, help="JSON file with parameter values")


def _add_grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=pipeline.METHODS, default=None)
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--depth", type=int, default=None)
    for flag, field_name in (
        ("--lambda", "lam"),
        ("--gamma", "gamma"),
        ("--m", "m"),
        ("--mu", "mu"),
        ("--clip", "clip_terms"),
        ("--decay", "decay"),
    ):
        parser.add_argument(flag, dest=f"grid_{field_name}", default=None, metavar="V1,V2,...",
                            help=f"grid values for {field_name}")
    parser.add_argument("--config", default=None,
                        help="JSON config; list-valued fields become grids")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sessionsearch",
        description="Index a corpus, replay search sessions, re-rank, and evaluate.",
    )
    sub = parser.add_subparsers(dest="command")

    p_index = sub.add_parser("index", help="build an index snapshot from a JSONL corpus")
    p_index.add_argument("--corpus", required=True, help="JSONL file with id and text fields")
    p_index.add_argument("--out", required=True, help="where to write the index snapshot")
    p_index.set_defaults(func=cmd_index)

    p_run = sub.add_parser("run", help="score sessions and write a run file")
    p_run.add_argument("--index", required=True, help="index snapshot from the index command")
    p_run.add_argument("--sessions", required=True, help="sessions JSON file")
    p_run.add_argument("--qrels", default=None, help="TREC qrels for the report metrics")
    p_run.add_argument("--out", required=True, help="run file to write (TREC 6-column)")
    p_run.add_argument("--report", default=None, help="metrics report JSON to write")
    p_run.add_argument("--dump-model", default=None, metavar="DIR",
                       help="write each session's term model JSON here (model methods)")
    p_run.add_argument("--dump-trace", default=None, metavar="DIR",
                       help="write each session's step trace JSON here (srm methods)")
    _add_param_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_tune = sub.add_parser("tune", help="grid-search parameters to maximize MAP")
    p_tune.add_argument("--index", required=True)
    p_tune.add_argument("--sessions", required=True, help="training sessions JSON file")
    p_tune.add_argument("--qrels", required=True)
    p_tune.add_argument("--out", default=None, help="where to write the best-params JSON")
    _add_grid_flags(p_tune)
    p_tune.set_defaults(func=cmd_tune)

    p_eval = sub.add_parser("eval", help="score an existing run file against qrels")
    p_eval.add_argument("--run", required=True, help="run file keyed by session id")
    p_eval.add_argument("--qrels", required=True)
    p_eval.add_argument("--sessions", required=True,
                        help="sessions JSON file (maps session ids to topics)")
    p_eval.add_argument("--report", default=None, help="metrics report JSON to write")
    p_eval.add_argument("--k", type=int, default=10)
    p_eval.add_argument("--depth", type=int, default=2000)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def cmd_index(args) -> int:
    corpus_path = _require_file(args.corpus, "corpus")
    docs = list(read_corpus_jsonl(corpus_path))
    if not docs:
        logger.warning("corpus %s is empty; writing an empty index", args.corpus)
    index = build_index(docs)
    index.save(args.out)
    print(
        f"indexed {index.stats.num_docs} documents, "
        f"{len(index.postings)} distinct terms -> {args.out}"
    )
    return 0


def _metrics_for_rankings(ordered, qrels, k: int, depth: int):
    """ordered: (session_id, topic_id, doc ids in rank order) triples."""
    g_max = qrels.max_grade()
    per_session = {}
    for session_id, topic_id, doc_ids in ordered:
        grades = qrels.for_topic(topic_id)
        per_session[session_id] = evalkit.session_metrics(doc_ids, grades, k, depth, g_max)
    return per_session, g_max


def cmd_run(args) -> int:
    file_scalars, _ = _load_config_file(args.config, allow_grids=False) if args.config else ({}, {})
    config = _effective_config(args, file_scalars)
    index = InvertedIndex.load(_require_file(args.index, "index"))
    sessions = load_sessions(_require_file(args.sessions, "sessions"))
    ids = [s.session_id for s in sessions]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{args.sessions}: duplicate session ids")

    results, skipped = pipeline.run_sessions(sessions, index, config)
    rankings = {result.session_id: result.ranking for result in results}
    evalkit.write_run_file(args.out, rankings, tag=config.method)
    print(f"wrote {args.out} ({len(results)} sessions scored, {len(skipped)} skipped)")

    if args.dump_model:
        model_dir = Path(args.dump_model)
        model_dir.mkdir(parents=True, exist_ok=True)
        for result in results:
            if result.model is not None:
                _write_json(model_dir / f"{result.session_id}.model.json", result.model.as_dict())
    if args.dump_trace:
        trace_dir = Path(args.dump_trace)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for result in results:
            if result.trace is not None:
                _write_json(trace_dir / f"{result.session_id}.trace.json", result.trace.to_dict())

    per_session: dict = {}
    metadata = {"run_tag": config.method, "ndcg_ideal_depth": config.depth}
    if args.qrels:
        qrels = evalkit.Qrels.from_trec_file(_require_file(args.qrels, "qrels"))
        ordered = [
            (r.session_id, r.topic_id, [doc_id for doc_id, _ in r.ranking]) for r in results
        ]
        per_session, g_max = _metrics_for_rankings(ordered, qrels, config.k, config.depth)
        metadata["max_grade"] = g_max
    report = evalkit.build_report(per_session, skipped, config.to_dict(), metadata)
    if report.mean:
        print("mean: " + json.dumps(report.mean, sort_keys=True))
    if args.report:
        _write_json(Path(args.report), report.to_dict())
        print(f"wrote {args.report}")
    return 0


def cmd_tune(args) -> int:
    file_scalars, grids = (
        _load_config_file(args.config, allow_grids=True) if args.config else ({}, {})
    )
    for field_name in _TUNABLE_FIELDS:
        raw = getattr(args, f"grid_{field_name}", None)
        if raw is not None:
            grids[field_name] = _parse_value_list(field_name, raw)
    if not grids:
        raise ValueError(
            "no grid given; pass value lists via --lambda/--gamma/--m/--mu/--decay/--clip "
            "or list-valued config fields"
        )
    base = _effective_config(args, file_scalars)
    index = InvertedIndex.load(_require_file(args.index, "index"))
    sessions = load_sessions(_require_file(args.sessions, "sessions"))
    if not sessions:
        raise ValueError(f"{args.sessions}: no sessions to tune on")
    qrels = evalkit.Qrels.from_trec_file(_require_file(args.qrels, "qrels"))

    best, table = evalkit.grid_tune(
        sessions, qrels, index, base, grids, score_fn=pipeline.score_session
    )
    payload = {
        "best": best.to_dict(),
        "best_map": max(row["map"] for row in table),
        "grid": sorted(grids),
        "table": table,
    }
    print(json.dumps(payload["best"], sort_keys=True))
    if args.out:
        _write_json(Path(args.out), payload)
        print(f"wrote {args.out}")
    return 0


def cmd_eval(args) -> int:
    rankings = evalkit.parse_run_file(_require_file(args.run, "run"))
    sessions = load_sessions(_require_file(args.sessions, "sessions"))
    qrels = evalkit.Qrels.from_trec_file(_require_file(args.qrels, "qrels"))
    topic_of = {session.session_id: session.topic_id for session in sessions}
    unknown = [key for key in rankings if key not in topic_of]
    if unknown:
        raise ValueError(f"{args.run}: session ids not in {args.sessions}: {sorted(unknown)}")

    ordered = [
        (session_id, topic_of[session_id], [doc_id for doc_id, _ in ranking])
        for session_id, ranking in rankings.items()
    ]
    per_session, g_max = _metrics_for_rankings(ordered, qrels, args.k, args.depth)
    skipped = [s.session_id for s in sessions if s.session_id not in rankings]
    config = {"k": args.k, "depth": args.depth}
    metadata = {"max_grade": g_max, "ndcg_ideal_depth": args.depth}
    report = evalkit.build_report(per_session, skipped, config, metadata)
    print("mean: " + json.dumps(report.mean, sort_keys=True))
    if args.report:
        _write_json(Path(args.report), report.to_dict())
        print(f"wrote {args.report}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
