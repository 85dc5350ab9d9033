"""Command-line interface.

Subcommands: ``build-templates`` mines the template base from training
data, ``ask`` answers one question (or runs a REPL), ``batch`` answers a
question file and writes the two report files, and ``eval`` scores
report files against gold annotations.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
error.  ``--offline`` guarantees that no network connection is opened.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import evaluation, pipeline
from .endpoint import load_graph
from .linking import DblpLinker, LinkerConfig
from .templates import build_base, load_base, save_base
from .translate import BaselineTranslator, NeuralTranslator, build_index

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class CliError(Exception):
    """Configuration problem; maps to exit code 2."""


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError("config file must contain a JSON object")
    return cfg


def _setting(args, cfg: dict, name: str, default=None):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    return cfg.get(name, default)


def _relations_path(args, cfg) -> Path | None:
    path = _setting(args, cfg, "relations")
    return Path(path) if path else None


def _vocabulary(args, cfg):
    from .sparql import Vocabulary, default_vocabulary, load_relations

    path = _relations_path(args, cfg)
    if path is None:
        return default_vocabulary()
    return Vocabulary(relations=tuple(load_relations(path)))


def _training_pairs(records) -> list[tuple[str, str]]:
    return [(r.id, r.gold_query) for r in records if r.gold_query]


def _make_pipeline(args, cfg: dict) -> pipeline.Pipeline:
    vocab = _vocabulary(args, cfg)
    offline = bool(_setting(args, cfg, "offline", False))

    templates_path = _setting(args, cfg, "templates")
    train_path = _setting(args, cfg, "train")
    train_records = evaluation.load_dataset(train_path) if train_path else None
    if templates_path:
        base = load_base(templates_path)
    elif train_records is not None:
        base = build_base(_training_pairs(train_records), vocab)
    else:
        raise CliError("need --templates or --train to supply the template base")

    backend = _setting(args, cfg, "backend", "baseline")
    if backend == "baseline":
        if train_records is None:
            raise CliError("the baseline backend needs --train for its question index")
        translator = BaselineTranslator(base, build_index(train_records, vocab))
    elif backend == "neural":
        if offline:
            raise CliError("--offline cannot use the neural backend")
        server_url = _setting(args, cfg, "server-url")
        if not server_url:
            raise CliError("the neural backend needs --server-url")
        translator = NeuralTranslator(server_url)
    else:
        raise CliError(f"unknown backend {backend!r}")

    graph_path = _setting(args, cfg, "graph")
    endpoint_url = _setting(args, cfg, "endpoint")
    if graph_path:
        answer_mode, graph = "local", load_graph(graph_path)
    elif endpoint_url:
        if offline:
            raise CliError("--offline cannot query a remote endpoint")
        answer_mode, graph = "remote", None
    else:
        raise CliError("need --graph (local answers) or --endpoint (remote answers)")

    fixtures = _setting(args, cfg, "fixtures")
    linker_cfg = LinkerConfig(
        api_base_url=_setting(args, cfg, "api-base-url", "https://dblp.org"),
        mode="offline" if (offline or fixtures) else "live",
        fixture_path=fixtures,
        cache_path=_setting(args, cfg, "cache"),
        requests_per_second=float(_setting(args, cfg, "requests-per-second", 1.0)),
        max_candidates=int(_setting(args, cfg, "max-candidates", 5)),
    )
    if offline and not fixtures:
        raise CliError("--offline needs --fixtures for entity linking")
    try:
        linker = DblpLinker(linker_cfg)
    except ValueError as exc:
        raise CliError(str(exc)) from None

    config = pipeline.PipelineConfig(
        k_templates=int(_setting(args, cfg, "k-templates", 3)),
        max_combinations_per_template=int(
            _setting(args, cfg, "max-combinations", 10)),
        answer_mode=answer_mode,
        endpoint_url=endpoint_url,
        graph_path=graph_path,
        prune_unused_entities=bool(_setting(args, cfg, "prune-unused", False)),
        translator_backend=backend,
    )
    try:
        return pipeline.Pipeline(base, translator, linker, config, graph=graph,
                                 vocab=vocab)
    except pipeline.PipelineConfigError as exc:
        raise CliError(str(exc)) from None


def _print_result(result: pipeline.QAResult, verbose: bool) -> None:
    if verbose:
        for line in result.trace:
            print(f"  | {line}")
        for query, outcome in result.tried_queries:
            print(f"  | tried [{outcome}]: {query}")
    if result.status == "answered":
        for answer in result.answer_list():
            print(answer)
    else:
        print(f"no answer ({result.status})")
        if result.status == "error" and result.trace and not verbose:
            print(result.trace[-1])


# -- subcommands ------------------------------------------------------------


def cmd_build_templates(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    vocab = _vocabulary(args, cfg)
    records = evaluation.load_dataset(args.train)
    base = build_base(_training_pairs(records), vocab)
    save_base(base, args.out)
    print(f"{len(base)} templates from {len(records)} records "
          f"({len(base.skipped)} queries skipped)")
    for qid, reason in base.skipped[:10]:
        print(f"  skipped {qid}: {reason}", file=sys.stderr)
    if not records:
        print("warning: training file contained no records", file=sys.stderr)
    return EXIT_OK


def cmd_ask(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    pipe = _make_pipeline(args, cfg)
    if args.question is not None:
        result = pipe.answer(args.question)
        _print_result(result, args.verbose)
        return EXIT_OK
    # REPL until end-of-input
    try:
        while True:
            line = input("? ").strip()
            if not line:
                continue
            _print_result(pipe.answer(line), args.verbose)
    except EOFError:
        pass
    return EXIT_OK


def cmd_batch(args) -> int:
    cfg = _load_config_file(args.config) if args.config else {}
    pipe = _make_pipeline(args, cfg)
    records = evaluation.load_dataset(args.questions)
    questions = [(r.id, r.question) for r in records]

    done: dict[str, list[str]] = {}
    if args.resume and Path(args.out_answers).is_file():
        with open(args.out_answers, encoding="utf-8") as fh:
            done = json.load(fh)
        questions = [(qid, q) for qid, q in questions if qid not in done]

    results = pipe.run_batch(questions, jobs=args.jobs)
    if done:
        kept = [pipeline.QAResult(question_id=qid, question="",
                                  answers=set(answers), status="answered")
                for qid, answers in done.items()]
        by_id = {r.question_id: r for r in kept + results}
        results = [by_id[r.id] for r in records if r.id in by_id]
    pipeline.write_reports(results, args.out_answers, args.out_entities,
                           prune_unused=bool(_setting(args, cfg, "prune-unused",
                                                      False)))
    answered = sum(r.status == "answered" for r in results)
    resumed = f", {len(done)} resumed" if done else ""
    print(f"{len(results)} questions, {answered} answered{resumed}")
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = evaluation.load_dataset(args.gold)
    with open(args.pred_answers, encoding="utf-8") as fh:
        pred_answers = json.load(fh)
    with open(args.pred_entities, encoding="utf-8") as fh:
        pred_entities = json.load(fh)
    el, qa = evaluation.evaluate_predictions(pred_answers, pred_entities, gold)
    sys.stdout.write(evaluation.render_report(el, qa))
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(evaluation.report_json(el, qa), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


# -- argument wiring ----------------------------------------------------------


def _add_pipeline_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file; flags override its keys")
    sp.add_argument("--templates", help="template base file (from build-templates)")
    sp.add_argument("--train", help="training dataset JSON")
    sp.add_argument("--relations", help="relations file (one IRI per line)")
    sp.add_argument("--backend", choices=["baseline", "neural"])
    sp.add_argument("--server-url", help="neural backend /translate server")
    sp.add_argument("--graph", help="local triple fixture file")
    sp.add_argument("--endpoint", help="remote SPARQL endpoint URL")
    sp.add_argument("--fixtures", help="entity-linking fixture directory")
    sp.add_argument("--cache", help="entity-linking cache directory")
    sp.add_argument("--offline", action="store_true", default=None,
                    help="forbid all network access")
    sp.add_argument("--k-templates", type=int, dest="k_templates")
    sp.add_argument("--max-combinations", type=int, dest="max_combinations")
    sp.add_argument("--max-candidates", type=int, dest="max_candidates")
    sp.add_argument("--requests-per-second", type=float,
                    dest="requests_per_second")
    sp.add_argument("--prune-unused", action="store_true", default=None,
                    dest="prune_unused",
                    help="drop linked entities unused by the chosen query")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dblpqa",
        description="Answer natural language questions over the DBLP knowledge graph")
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-templates",
                        help="mine the template base from training queries")
    sp.add_argument("--train", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--relations")
    sp.add_argument("--config")
    sp.set_defaults(fn=cmd_build_templates)

    sp = sub.add_parser("ask", help="answer one question or run a REPL")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--question")
    group.add_argument("--repl", action="store_true")
    sp.add_argument("--verbose", "-v", action="store_true",
                    help="print the four-step trace")
    _add_pipeline_flags(sp)
    sp.set_defaults(fn=cmd_ask)

    sp = sub.add_parser("batch", help="answer a question file, write reports")
    sp.add_argument("--questions", required=True)
    sp.add_argument("--out-answers", required=True)
    sp.add_argument("--out-entities", required=True)
    sp.add_argument("--resume", action="store_true",
                    help="skip ids already present in --out-answers")
    sp.add_argument("--jobs", type=int, default=1)
    _add_pipeline_flags(sp)
    sp.set_defaults(fn=cmd_batch)

    sp = sub.add_parser("eval", help="score report files against gold data")
    sp.add_argument("--pred-answers", required=True)
    sp.add_argument("--pred-entities", required=True)
    sp.add_argument("--gold", required=True)
    sp.add_argument("--out-json", help="also write the JSON report here")
    sp.set_defaults(fn=cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(),
                                      logging.WARNING))
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except evaluation.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (evaluation.IdMismatch, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
