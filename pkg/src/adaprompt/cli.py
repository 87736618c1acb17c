"""Command-line entry point.

Subcommands: select (build an exemplar set), evaluate (self-consistency
accuracy over a test file), score (one-shot uncertainty table), serve (the
annotation HTTP service), sweep-k (select+evaluate per budget).

Exit codes: 0 success, 2 usage, 3 backend failure, 4 data/schema problem,
5 annotation aborted.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from pathlib import Path
from typing import Any, Optional, Sequence, TextIO

from .backends import (
    BackendError,
    HashEmbedder,
    OpenAIChatBackend,
    OpenAIEmbeddingBackend,
    ScriptedEmbedder,
    ScriptedMockBackend,
)
from .cache import ResponseCache
from .datasets import find_dataset, load_question_file, load_test_pool, load_train_pool
from .domain import (
    DomainError,
    ExemplarSet,
    Metric,
    PoolRole,
    SchemaError,
    SessionConfig,
    Strategy,
    load_exemplar_file,
    save_exemplar_file,
    subsample_pool,
)
from .evaluation import EvalConfig, evaluate, write_eval_csv, write_eval_json
from .selection import (
    AnnotationAborted,
    Annotator,
    run_strategy,
    resume_or_create_session,
    stub_annotator,
)
from .session import AnnotationReply, AnnotationRequest, SessionStatus, SessionStore
from .parsing import normalize_answer_input
from .uncertainty import score_pool

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_DATA = 4
EXIT_ABORTED = 5


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def make_backend(spec: str):
    if spec.startswith("mock:"):
        return ScriptedMockBackend.from_file(spec[len("mock:") :])
    if spec == "openai":
        try:
            return OpenAIChatBackend.from_env()
        except ValueError as exc:
            raise BackendError("auth_failed", str(exc)) from exc
    raise SchemaError(f"unknown backend spec {spec!r}; use mock:<fixture.json> or openai")


def make_embedder(spec: str):
    if spec.startswith("hash"):
        dim = int(spec.split(":", 1)[1]) if ":" in spec else 8
        return HashEmbedder(dim)
    if spec.startswith("scripted:"):
        return ScriptedEmbedder.from_file(spec[len("scripted:") :])
    if spec == "openai":
        try:
            chat = OpenAIChatBackend.from_env()
        except ValueError as exc:
            raise BackendError("auth_failed", str(exc)) from exc
        return OpenAIEmbeddingBackend(
            base_url=chat.base_url, model=chat.model, api_key=chat.api_key
        )
    raise SchemaError(
        f"unknown embedder spec {spec!r}; use hash[:dim], scripted:<fixture.json>, or openai"
    )


def interactive_annotator(
    annotator_id: str, in_stream: TextIO = sys.stdin, out: TextIO = sys.stdout
) -> Annotator:
    """Prompt on the terminal for a rationale and answer; empty input aborts."""

    def annotate(request: AnnotationRequest) -> AnnotationReply:
        question = request.question
        print(f"\n=== Round {request.round}: annotate {question.id} ===", file=out)
        print(f"Q: {question.text}", file=out)
        if question.choices:
            for label, text in question.choices:
                print(f"  ({label}) {text}", file=out)
        if request.report is not None:
            report = request.report
            print(
                f"Sampled answers (disagreement {report.disagreement:.3f}, "
                f"entropy {report.entropy_nats:.3f} nats):",
                file=out,
            )
            for answer, count in report.distribution.counts:
                shown = answer.canonical if answer.valid else "<unparseable>"
                print(f"  {count:2d} x {shown}", file=out)
        print("Rationale (one line; empty aborts):", file=out)
        rationale = in_stream.readline()
        if not rationale or not rationale.strip():
            raise AnnotationAborted("no rationale entered")
        while True:
            print("Final answer:", file=out)
            raw = in_stream.readline()
            if not raw or not raw.strip():
                raise AnnotationAborted("no answer entered")
            answer = normalize_answer_input(raw.strip(), question)
            if answer.valid:
                break
            print(f"could not parse {raw.strip()!r}; try again", file=out)
        return AnnotationReply(
            rationale=rationale.strip(), answer=answer, annotator_id=annotator_id
        )

    return annotate


def _load_config_file(path: Optional[str]) -> dict[str, Any]:
    if not path:
        return {}
    config_path = Path(path)
    if not config_path.exists():
        raise SchemaError(f"config file not found: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("config file must hold a JSON object")
    return data


def _setting(args: argparse.Namespace, file_config: dict[str, Any], name: str, default: Any) -> Any:
    """Precedence: explicit flag > config file > built-in/preset default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in file_config:
        return file_config[name]
    return default


# ---------------------------------------------------------------------------
# Subcommands


def cmd_select(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    manifest = find_dataset(args.datasets_dir, args.dataset)
    strategy = Strategy(_setting(args, file_config, "strategy", Strategy.ADAPTIVE.value))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if strategy is Strategy.FIXED:
        if not args.exemplars:
            raise SchemaError("--strategy fixed needs --exemplars <file>")
        exemplar_set, file_dataset, file_strategy = load_exemplar_file(args.exemplars)
        save_exemplar_file(
            out_dir / "exemplars.json", exemplar_set, file_dataset, file_strategy
        )
        print(f"loaded {len(exemplar_set)} fixed exemplars -> {out_dir / 'exemplars.json'}")
        return EXIT_OK

    config = SessionConfig(
        budget_k=int(_setting(args, file_config, "k", manifest.preset_k)),
        metric=Metric(_setting(args, file_config, "metric", Metric.ENTROPY.value)),
        strategy=strategy,
        seed=int(_setting(args, file_config, "seed", 0)),
        samples_l=int(_setting(args, file_config, "l", 10)),
        pool_cap_s=int(_setting(args, file_config, "pool_cap", 0)),
        sampling_temperature=float(_setting(args, file_config, "temperature", 0.7)),
        max_in_flight=int(_setting(args, file_config, "max_in_flight", 4)),
    )
    pool = load_train_pool(manifest)
    store = SessionStore(out_dir)
    session = resume_or_create_session(store, manifest.name, config, pool)

    backend = None
    if strategy in (Strategy.ADAPTIVE, Strategy.ACTIVE, Strategy.AUTO_COT):
        backend = make_backend(_setting(args, file_config, "backend", "openai"))
    embedder = None
    if strategy is Strategy.AUTO_COT:
        embedder = make_embedder(_setting(args, file_config, "embedder", "hash:8"))

    annotator_kind = _setting(args, file_config, "annotator", "stub")
    if annotator_kind == "http":
        return _select_with_http_annotator(args, store, session, backend, embedder)
    annotator: Optional[Annotator] = None
    if strategy is not Strategy.AUTO_COT:
        if annotator_kind == "stub":
            annotator = stub_annotator(args.annotator_id or "stub")
        elif annotator_kind == "interactive":
            annotator = interactive_annotator(args.annotator_id or "cli")
        else:
            raise SchemaError(f"unknown annotator {annotator_kind!r}")

    exemplar_set = run_strategy(
        store, session, backend=backend, annotator=annotator, embedder=embedder
    )
    print(
        f"selected {len(exemplar_set)} exemplars "
        f"({session.config.strategy.value}, {session.config.metric.value}) "
        f"-> {store.exemplar_path}"
    )
    return EXIT_OK


def _select_with_http_annotator(
    args: argparse.Namespace, store, session, backend, embedder
) -> int:
    import uvicorn

    from .api import ManagedSession, SessionManager, create_app

    manager = SessionManager(
        root=store.directory,
        datasets_dir=args.datasets_dir,
        backend=backend,
        embedder=embedder,
        scan_existing=False,
    )
    managed = ManagedSession(store=store, session=session)
    manager.adopt(managed)
    manager.ensure_running(managed)
    app = create_app(manager)
    server = uvicorn.Server(
        uvicorn.Config(app, host=args.host, port=args.port, log_level="warning")
    )

    def watch() -> None:
        while not server.should_exit:
            if session.status in (SessionStatus.COMPLETE, SessionStatus.ABORTED):
                time.sleep(0.2)  # let the last HTTP response flush
                server.should_exit = True
                return
            if managed.error is not None:
                server.should_exit = True
                return
            time.sleep(0.1)

    print(
        f"annotate session {session.id!r} at http://{args.host}:{args.port} "
        f"(round {session.current_round()} of {session.config.budget_k})"
    )
    threading.Thread(target=watch, daemon=True).start()
    server.run()
    if managed.error is not None:
        raise managed.error
    if session.status is SessionStatus.COMPLETE:
        print(f"selected {len(session.exemplar_set)} exemplars -> {store.exemplar_path}")
        return EXIT_OK
    raise AnnotationAborted("server stopped before the session completed")


def cmd_evaluate(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    exemplar_set, dataset_name, strategy_label = load_exemplar_file(args.exemplars)
    test_pool = load_question_file(args.test, PoolRole.TEST)
    backend = make_backend(_setting(args, file_config, "backend", "openai"))
    eval_config = EvalConfig(
        votes_per_question=int(_setting(args, file_config, "votes", 6)),
        runs=int(_setting(args, file_config, "runs", 3)),
        temperature=float(_setting(args, file_config, "temperature", 0.7)),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = ResponseCache(out_dir / "cache")
    result = evaluate(exemplar_set, test_pool, backend, eval_config, cache)
    write_eval_json(out_dir / "eval.json", result, eval_config)
    write_eval_csv(out_dir / "eval.csv", result, test_pool)
    print(
        f"exemplars: {dataset_name}/{strategy_label} ({len(exemplar_set)}) | "
        f"accuracy {result.accuracy:.3f} | "
        f"mean over {eval_config.runs} runs {result.mean_accuracy:.3f}"
    )
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    manifest = find_dataset(args.datasets_dir, args.dataset)
    pool = load_train_pool(manifest)
    seed = int(_setting(args, file_config, "seed", 0))
    pool_cap = _setting(args, file_config, "pool_cap", None)
    if pool_cap is not None:
        pool = subsample_pool(pool, int(pool_cap), seed)
    if args.exemplars:
        exemplar_set, _, _ = load_exemplar_file(args.exemplars)
    else:
        exemplar_set = ExemplarSet((), 0)
    config = SessionConfig(
        budget_k=1,
        metric=Metric(_setting(args, file_config, "metric", Metric.ENTROPY.value)),
        strategy=Strategy.ACTIVE,
        seed=seed,
        samples_l=int(_setting(args, file_config, "l", 10)),
        pool_cap_s=max(len(pool), 1),
        sampling_temperature=float(_setting(args, file_config, "temperature", 0.7)),
        max_in_flight=int(_setting(args, file_config, "max_in_flight", 4)),
    )
    backend = make_backend(_setting(args, file_config, "backend", "openai"))
    reports = score_pool(backend, exemplar_set, pool.questions, config)
    rows = [(r.question_id, r.disagreement, r.entropy_nats) for r in reports]
    print("question_id\tdisagreement\tentropy")
    for qid, disagreement, entropy in rows:
        print(f"{qid}\t{disagreement:.6f}\t{entropy:.6f}")
    if args.out:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write("question_id,disagreement,entropy\n")
            for qid, disagreement, entropy in rows:
                handle.write(f"{qid},{disagreement!r},{entropy!r}\n")
        print(f"score table -> {out_path}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import SessionManager, create_app

    backend = make_backend(args.backend) if args.backend else None
    embedder = make_embedder(args.embedder) if args.embedder else None
    manager = SessionManager(
        root=args.session_dir,
        datasets_dir=args.datasets_dir,
        backend=backend,
        embedder=embedder,
    )
    app = create_app(manager)
    print(f"annotation service on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log_level)
    return EXIT_OK


def cmd_sweep_k(args: argparse.Namespace) -> int:
    try:
        k_values = [int(part) for part in args.k_list.split(",") if part.strip()]
    except ValueError as exc:
        raise SchemaError(f"--k-list must be comma-separated integers: {exc}") from exc
    if not k_values or any(k < 1 for k in k_values):
        raise SchemaError("--k-list needs positive integers")
    manifest = find_dataset(args.datasets_dir, args.dataset)
    pool = load_train_pool(manifest)
    test_pool = load_test_pool(manifest)
    backend = make_backend(args.backend)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    eval_config = EvalConfig(
        votes_per_question=args.votes, runs=args.runs, temperature=args.temperature
    )
    rows = []
    for k in k_values:
        config = SessionConfig(
            budget_k=k,
            metric=Metric(args.metric),
            strategy=Strategy(args.strategy),
            seed=args.seed,
            samples_l=args.l,
            sampling_temperature=args.temperature,
        )
        run_dir = out_dir / f"k{k}"
        store = SessionStore(run_dir / "select")
        session = resume_or_create_session(store, manifest.name, config, pool)
        embedder = (
            make_embedder(args.embedder) if config.strategy is Strategy.AUTO_COT else None
        )
        annotator = (
            stub_annotator() if config.strategy is not Strategy.AUTO_COT else None
        )
        exemplar_set = run_strategy(
            store, session, backend=backend, annotator=annotator, embedder=embedder
        )
        eval_dir = run_dir / "eval"
        eval_dir.mkdir(parents=True, exist_ok=True)
        cache = ResponseCache(eval_dir / "cache")
        result = evaluate(exemplar_set, test_pool, backend, eval_config, cache)
        write_eval_json(eval_dir / "eval.json", result, eval_config)
        write_eval_csv(eval_dir / "eval.csv", result, test_pool)
        rows.append((k, config.strategy.value, result.mean_accuracy))
        print(f"k={k}: mean accuracy {result.mean_accuracy:.3f}")
    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", encoding="utf-8") as handle:
        handle.write("k,strategy,accuracy\n")
        for k, strategy_name, accuracy in rows:
            handle.write(f"{k},{strategy_name},{accuracy!r}\n")
    print(f"sweep table -> {sweep_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaprompt",
        description="Build, annotate, and evaluate chain-of-thought exemplar sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--datasets-dir", default="datasets", help="directory of dataset manifests")
        p.add_argument("--config", default=None, help="JSON file with default settings")

    select = sub.add_parser("select", help="build an exemplar set")
    add_common(select)
    select.add_argument("--dataset", required=True)
    select.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy],
        default=None,
        help="selection strategy (default adaptive)",
    )
    select.add_argument(
        "--metric", choices=[m.value for m in Metric], default=None,
        help="uncertainty metric (default entropy)",
    )
    select.add_argument("--k", type=_positive_int, default=None, help="exemplar budget")
    select.add_argument("--l", type=_positive_int, default=None, help="samples per question")
    select.add_argument("--pool-cap", type=_positive_int, default=None)
    select.add_argument("--seed", type=_non_negative_int, default=None)
    select.add_argument("--temperature", type=float, default=None)
    select.add_argument("--max-in-flight", type=_positive_int, default=None)
    select.add_argument("--backend", default=None, help="mock:<fixture.json> or openai")
    select.add_argument("--embedder", default=None, help="hash[:dim], scripted:<file>, openai")
    select.add_argument(
        "--annotator", choices=["stub", "interactive", "http"], default=None
    )
    select.add_argument("--annotator-id", default=None)
    select.add_argument("--exemplars", default=None, help="input file for --strategy fixed")
    select.add_argument("--host", default="127.0.0.1")
    select.add_argument("--port", type=int, default=8321)
    select.add_argument("--out", required=True, help="session/output directory")
    select.set_defaults(func=cmd_select)

    eval_cmd = sub.add_parser("evaluate", help="self-consistency accuracy on a test file")
    add_common(eval_cmd)
    eval_cmd.add_argument("--exemplars", required=True)
    eval_cmd.add_argument("--test", required=True, help="test question JSONL")
    eval_cmd.add_argument("--votes", type=_positive_int, default=None)
    eval_cmd.add_argument("--runs", type=_positive_int, default=None)
    eval_cmd.add_argument("--temperature", type=float, default=None)
    eval_cmd.add_argument("--backend", default=None)
    eval_cmd.add_argument("--out", required=True)
    eval_cmd.set_defaults(func=cmd_evaluate)

    score = sub.add_parser("score", help="one-shot uncertainty table")
    add_common(score)
    score.add_argument("--dataset", required=True)
    score.add_argument("--exemplars", default=None)
    score.add_argument(
        "--metric", choices=[m.value for m in Metric], default=None
    )
    score.add_argument("--l", type=_positive_int, default=None)
    score.add_argument("--pool-cap", type=_positive_int, default=None)
    score.add_argument("--seed", type=_non_negative_int, default=None)
    score.add_argument("--temperature", type=float, default=None)
    score.add_argument("--max-in-flight", type=_positive_int, default=None)
    score.add_argument("--backend", default=None)
    score.add_argument("--out", default=None, help="optional CSV path")
    score.set_defaults(func=cmd_score)

    serve = sub.add_parser("serve", help="run the annotation HTTP service")
    add_common(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8321)
    serve.add_argument("--session-dir", required=True)
    serve.add_argument("--backend", default=None)
    serve.add_argument("--embedder", default=None)
    serve.add_argument("--log-level", default="warning")
    serve.set_defaults(func=cmd_serve)

    sweep = sub.add_parser("sweep-k", help="select + evaluate across budgets")
    add_common(sweep)
    sweep.add_argument("--dataset", required=True)
    sweep.add_argument("--k-list", required=True, help="comma-separated budgets")
    sweep.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy if s is not Strategy.FIXED],
        default=Strategy.ADAPTIVE.value,
    )
    sweep.add_argument(
        "--metric", choices=[m.value for m in Metric], default=Metric.ENTROPY.value
    )
    sweep.add_argument("--l", type=_positive_int, default=10)
    sweep.add_argument("--seed", type=_non_negative_int, default=0)
    sweep.add_argument("--votes", type=_positive_int, default=6)
    sweep.add_argument("--runs", type=_positive_int, default=3)
    sweep.add_argument("--temperature", type=float, default=0.7)
    sweep.add_argument("--backend", required=True)
    sweep.add_argument("--embedder", default="hash:8")
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(func=cmd_sweep_k)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AnnotationAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (SchemaError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_ABORTED


if __name__ == "__main__":
    sys.exit(main())
