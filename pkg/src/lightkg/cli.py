"""Command line front end.

Subcommands mirror the pipeline stages so each one is independently
runnable; ``pipeline`` chains them. Exit codes: 1 usage, 2 input parse,
3 model endpoint, 4 internal.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregation import aggregate_triples
from .client import ModelClientError
from .evaluation import GoldFormatError, evaluate_run
from .extraction import CorpusFormatError, read_corpus
from .pipeline import (
    ConfigError,
    PipelineConfig,
    StageError,
    extract_corpus,
    filter_for_export,
    run_pipeline,
)
from .serialize import (
    GraphParseError,
    deserialize_graph,
    format_for_path,
    serialize_graph,
    triples_from_jsonl,
    triples_to_jsonl,
)
from .topology import RuleFileError, discover, load_rules, load_senses

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_ENDPOINT = 3
EXIT_INTERNAL = 4

_PARSE_ERRORS = (GraphParseError, CorpusFormatError, RuleFileError, GoldFormatError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise _UsageError(f"{message}\n{self.format_usage()}")


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise _UsageError(f"{what} not found: {path}")
    return p


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.load(_existing(args.config, "config file"))
    return PipelineConfig()


def build_parser() -> _Parser:
    parser = _Parser(prog="lightkg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="extract triples from a corpus")
    p_extract.add_argument("corpus")
    p_extract.add_argument("-o", "--output", required=True)
    p_extract.add_argument("-c", "--config", help="pipeline config json")
    p_extract.add_argument("--extractor", choices=("model", "pattern", "fixture"))
    p_extract.add_argument("--no-context", action="store_true")
    p_extract.set_defaults(handler=_cmd_extract)

    p_agg = sub.add_parser("aggregate", help="fold triples jsonl into a graph")
    p_agg.add_argument("triples")
    p_agg.add_argument("-o", "--output", required=True)
    p_agg.add_argument("-c", "--config", help="pipeline config json")
    p_agg.set_defaults(handler=_cmd_aggregate)

    p_disc = sub.add_parser("discover", help="topology scoring and inference")
    p_disc.add_argument("graph")
    p_disc.add_argument("--rules", required=True)
    p_disc.add_argument("--senses")
    p_disc.add_argument("-o", "--output", required=True)
    p_disc.add_argument("-c", "--config", help="pipeline config json")
    p_disc.set_defaults(handler=_cmd_discover)

    p_eval = sub.add_parser("eval", help="score a graph against gold triples")
    p_eval.add_argument("graph")
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--policy", choices=("strict", "relaxed"), default="strict")
    p_eval.add_argument("--include-inferred", action="store_true")
    p_eval.add_argument("-o", "--output", help="also write the report json here")
    p_eval.set_defaults(handler=_cmd_eval)

    p_pipe = sub.add_parser("pipeline", help="full run: corpus to scored graph")
    p_pipe.add_argument("corpus")
    p_pipe.add_argument("-c", "--config", required=True)
    p_pipe.add_argument("-o", "--output", required=True, help="output directory")
    p_pipe.set_defaults(handler=_cmd_pipeline)

    return parser


def _cmd_extract(args) -> int:
    config = _load_config(args)
    overrides = {}
    if args.extractor:
        overrides["extractor"] = args.extractor
    if args.no_context:
        overrides["include_context"] = False
    if overrides:
        config = PipelineConfig.from_dict({**config.to_dict(), **overrides})
    documents = read_corpus(_existing(args.corpus, "corpus"))
    _, results = extract_corpus(config, documents)
    triples = [t for r in results for t in r.triples]
    Path(args.output).write_bytes(triples_to_jsonl(triples))
    rejected = sum(len(r.rejected_lines) for r in results)
    print(f"extracted {len(triples)} triples ({rejected} rejected lines) -> {args.output}")
    return EXIT_OK


def _cmd_aggregate(args) -> int:
    config = _load_config(args)
    data = _existing(args.triples, "triples file").read_bytes()
    triples = triples_from_jsonl(data)
    outcome = aggregate_triples(triples, config.normalization, config.base_confidence)
    fmt = format_for_path(args.output)
    Path(args.output).write_bytes(serialize_graph(outcome.graph, fmt))
    print(
        f"aggregated {outcome.graph.node_count} nodes, {outcome.graph.edge_count} edges "
        f"({len(outcome.rejected)} rejected triples) -> {args.output}"
    )
    return EXIT_OK


def _cmd_discover(args) -> int:
    config = _load_config(args)
    graph_path = _existing(args.graph, "graph file")
    graph = deserialize_graph(graph_path.read_bytes(), format_for_path(graph_path))
    rules = load_rules(_existing(args.rules, "rules file"))
    senses = load_senses(_existing(args.senses, "senses file")) if args.senses else {}
    result = discover(
        graph,
        rules=rules,
        senses_by_node=senses,
        config=config.topology,
        enabled=config.topology_enabled,
    )
    fmt = format_for_path(args.output)
    Path(args.output).write_bytes(
        serialize_graph(filter_for_export(result, config.confidence_threshold), fmt)
    )
    inferred = sum(1 for e in result.edges.values() if e.inferred)
    print(f"discovered {inferred} inferred edges -> {args.output}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    graph_path = _existing(args.graph, "graph file")
    gold_path = _existing(args.gold, "gold file")
    policy = "predicate_relaxed" if args.policy == "relaxed" else "strict"
    report = evaluate_run(
        graph_path, gold_path, policy=policy, include_inferred=args.include_inferred
    )
    print(report.render_table())
    if args.output:
        Path(args.output).write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = PipelineConfig.load(_existing(args.config, "config file"))
    corpus = _existing(args.corpus, "corpus")
    summary = run_pipeline(config, corpus, args.output)
    counts = summary["counts"]
    print(
        f"pipeline done: {counts['nodes']} nodes, {counts['edges']} edges "
        f"({counts['inferred_edges']} inferred) -> {summary['outputs']['graph']}"
    )
    return EXIT_OK


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (_UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, _PARSE_ERRORS):
        return EXIT_INPUT
    if isinstance(exc, ModelClientError):
        return EXIT_ENDPOINT
    if isinstance(exc, StageError) and exc.__cause__ is not None:
        cause_code = _exit_code_for(exc.__cause__)
        return cause_code if cause_code != EXIT_INTERNAL else EXIT_INTERNAL
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    except (ConfigError, *_PARSE_ERRORS, ModelClientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    except Exception as exc:  # anything else is an internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
