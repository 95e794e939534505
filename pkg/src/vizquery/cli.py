"""Command-line interface.

Exit codes: 0 success, 1 validation-invalid, 2 usage error, 3 provider or
network failure. Machine-readable output goes to stdout, diagnostics to
stderr. The ``prompt`` subcommand exists for prompt explainability: it
renders the exact bytes a query would send, without touching the network.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation
from .dataset import Dataset, IngestError, ingest
from .llm import ProviderError, provider_from_config
from .prompt import Mode, PromptConfig, assemble, render
from .response import (
    MalformedJsonError,
    report_to_dict,
    spec_from_object,
    spec_to_dict,
)
from .session import ask, create_session
from .dataset import subset as make_subset

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_PROVIDER = 3

DEFAULT_STATE_DIR = ".vizquery"


class UsageError(ValueError):
    pass


def _registry_path(state_dir: Path) -> Path:
    return state_dir / "datasets" / "registry.json"


def _load_registry(state_dir: Path) -> dict:
    path = _registry_path(state_dir)
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def _save_registry(state_dir: Path, registry: dict) -> None:
    path = _registry_path(state_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(registry, indent=2) + "\n", encoding="utf-8")


def _resolve_dataset(name: str, state_dir: Path) -> Dataset:
    """A dataset argument is either a readable file or a registered id."""
    candidate = Path(name)
    if candidate.exists() and candidate.is_file():
        return ingest(candidate, _guess_format(candidate))
    registry = _load_registry(state_dir)
    if name in registry:
        entry = registry[name]
        return ingest(entry["path"], entry.get("format", "csv"), dataset_id=name)
    raise UsageError(f"unknown dataset {name!r}: not a file and not registered")


def _guess_format(path: Path) -> str:
    return "json_records" if path.suffix.lower() == ".json" else "csv"


def _load_config(path: str | None) -> dict:
    if path is None:
        raise UsageError("this command needs --config pointing at a config file")
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


def _provider_from_args(args: argparse.Namespace):
    config = _load_config(args.config)
    provider_cfg = config.get("provider")
    if not provider_cfg:
        raise UsageError("config file has no 'provider' object")
    return provider_from_config(provider_cfg)


def _load_previous(path: str | None):
    if path is None:
        return None
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return spec_from_object(obj)
    except (OSError, json.JSONDecodeError, MalformedJsonError) as exc:
        raise UsageError(f"cannot load previous specification {path}: {exc}") from exc


def cmd_ingest(args: argparse.Namespace) -> int:
    state_dir = Path(args.state_dir)
    path = Path(args.file)
    fmt = args.format or _guess_format(path)
    dataset = ingest(path, fmt, dataset_id=args.id)
    registry = _load_registry(state_dir)
    registry[dataset.id] = {"path": str(path.resolve()), "format": fmt}
    _save_registry(state_dir, registry)
    schema = {
        "dataset_id": dataset.id,
        "row_count": dataset.row_count,
        "attributes": [
            {"name": a.name, "datatype": a.datatype.value} for a in dataset.attributes
        ],
    }
    print(json.dumps(schema, indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_prompt(args: argparse.Namespace) -> int:
    dataset = _resolve_dataset(args.dataset, Path(args.state_dir))
    previous = _load_previous(args.prev)
    mode = Mode.FOLLOW_UP if args.follow_up else Mode.INITIAL
    config = PromptConfig(
        mode=mode,
        json_only=not args.no_json_only,
        token_budget=args.token_budget,
        seed=args.seed,
    )
    text = render(assemble(make_subset(dataset, args.seed), [args.query], config, previous))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    dataset = _resolve_dataset(args.dataset, Path(args.state_dir))
    provider = _provider_from_args(args)
    session = create_session(
        dataset,
        args.seed,
        provider,
        json_only=not args.no_json_only,
        token_budget=args.token_budget,
        repair_enabled=not args.no_repair,
    )
    mode = Mode.FOLLOW_UP if args.follow_up else Mode.INITIAL
    if mode is Mode.FOLLOW_UP:
        previous = _load_previous(args.prev)
        if previous is None:
            raise UsageError("--follow-up needs --prev <specification.json>")
        # Seed the history so the session has a specification to mutate.
        from .response import ValidationReport, Verdict
        from .session import Turn

        session.turns.append(
            Turn(
                query="(previous)",
                mode=Mode.INITIAL,
                specification=previous,
                report=ValidationReport(verdict=Verdict.VALID, findings=()),
                latency_seconds=0.0,
            )
        )
    turn = ask(session, args.query, mode)

    if turn.report is not None:
        print(json.dumps(report_to_dict(turn.report), indent=2), file=sys.stderr)
    if turn.error is not None and turn.error.provider:
        print(f"provider error: {turn.error.message}", file=sys.stderr)
        return EXIT_PROVIDER
    if turn.specification is not None:
        print(json.dumps(spec_to_dict(turn.specification), indent=2, ensure_ascii=False))
    if turn.error is not None or (
        turn.report is not None and turn.report.verdict.value == "Invalid"
    ):
        return EXIT_INVALID
    return EXIT_OK


def _registry_for_eval(args: argparse.Namespace) -> dict[str, Dataset]:
    registry: dict[str, Dataset] = {}
    state_registry = _load_registry(Path(args.state_dir))
    for dataset_id, entry in state_registry.items():
        registry[dataset_id] = ingest(
            entry["path"], entry.get("format", "csv"), dataset_id=dataset_id
        )
    if args.data_dir:
        for path in sorted(Path(args.data_dir).iterdir()):
            if path.suffix.lower() in (".csv", ".json") and path.is_file():
                registry[path.stem] = ingest(path, _guess_format(path))
    return registry


def cmd_eval_run(args: argparse.Namespace) -> int:
    corpus = evaluation.load_corpus(args.corpus)
    registry = _registry_for_eval(args)
    provider = _provider_from_args(args)
    report = evaluation.run_corpus(
        corpus, registry, provider, seed=args.seed, repair_enabled=args.repair
    )
    if args.out:
        evaluation.save_report(report, args.out)
        print(f"wrote {args.out} ({len(report.records)} records)", file=sys.stderr)
    else:
        print(json.dumps(evaluation.report_to_json_dict(report), indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_eval_score(args: argparse.Namespace) -> int:
    report = evaluation.load_report(args.report)
    annotations = evaluation.load_annotations(args.annotations)
    final, entries = evaluation.reconcile(annotations, tiebreaker_id=args.tiebreaker)
    scored = evaluation.score(report, final, reconciliation=entries)
    doc = evaluation.report_to_json_dict(scored)
    if args.out:
        evaluation.save_report(scored, args.out)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        print(json.dumps(doc, indent=2, ensure_ascii=False))
    acc = scored.overall_accuracy
    print(
        f"accuracy: {acc.accurate}/{acc.total} = {acc.accuracy_pct}% | "
        f"mean latency: {scored.mean_latency_seconds:.3f}s",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
    host, _, port = config.listen_address.partition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port or 8750))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vizquery",
        description="Compile natural-language queries over tabular data into validated analytic specifications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--state-dir", default=DEFAULT_STATE_DIR)

    p_ingest = sub.add_parser("ingest", help="register a dataset and print its inferred schema")
    p_ingest.add_argument("file")
    p_ingest.add_argument("--format", choices=["csv", "json_records"])
    p_ingest.add_argument("--id", help="dataset id (default: file stem)")
    add_common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    def add_prompt_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("dataset")
        p.add_argument("query")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--follow-up", action="store_true")
        p.add_argument("--prev", help="previous specification JSON (for --follow-up)")
        p.add_argument("--no-json-only", action="store_true", help="keep LLM explanations")
        p.add_argument("--token-budget", type=int, default=8000)
        add_common(p)

    p_prompt = sub.add_parser("prompt", help="render the exact prompt bytes; no network")
    add_prompt_args(p_prompt)
    p_prompt.add_argument("--out", help="write the prompt to a file instead of stdout")
    p_prompt.set_defaults(func=cmd_prompt)

    p_query = sub.add_parser("query", help="run the full pipeline for one query")
    add_prompt_args(p_query)
    p_query.add_argument("--config", help="config file with the provider settings")
    p_query.add_argument("--no-repair", action="store_true")
    p_query.set_defaults(func=cmd_query)

    p_eval = sub.add_parser("eval", help="corpus evaluation harness")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)

    p_run = eval_sub.add_parser("run", help="replay a corpus and write the run report")
    p_run.add_argument("corpus")
    p_run.add_argument("--config", help="config file with the provider settings")
    p_run.add_argument("--data-dir", help="directory of data files resolvable by dataset id")
    p_run.add_argument("--seed", type=int, default=42)
    p_run.add_argument("--repair", action="store_true")
    p_run.add_argument("--out", help="report JSON path (default: stdout)")
    add_common(p_run)
    p_run.set_defaults(func=cmd_eval_run)

    p_score = eval_sub.add_parser("score", help="reconcile annotations and compute metrics")
    p_score.add_argument("report")
    p_score.add_argument("annotations")
    p_score.add_argument("--tiebreaker", default="tiebreaker", help="annotator id of the tiebreaker")
    p_score.add_argument("--out", help="scored report path (default: stdout)")
    p_score.set_defaults(func=cmd_eval_score)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", help="service config file")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def cli_dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, evaluation.EmptyCorpusError, evaluation.UnknownDatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        evaluation.MissingAnnotationError,
        evaluation.MissingTiebreakerError,
        evaluation.UnreconciledCasesError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
