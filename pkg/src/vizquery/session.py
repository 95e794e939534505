"""Conversation state for the human query loop.

A session pins one dataset and one subset seed, so every turn's prompt
embeds identical sample rows. Turns are append-only; follow-up queries
mutate the latest successful specification, never the history.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .dataset import Dataset, DataSubset, subset
from .llm import Completion, ProviderError
from .prompt import EmptyQueryError, Mode, PromptConfig, assemble, render
from .response import (
    AnalyticSpecification,
    MalformedJsonError,
    RepairFailedError,
    ValidationReport,
    Verdict,
    parse,
    repair,
    report_from_dict,
    report_from_parse_failure,
    report_to_dict,
    spec_from_object,
    spec_to_dict,
    validate,
)


class NoPriorSpecificationError(ValueError):
    """A follow-up was asked before any turn produced a specification."""


@dataclass(frozen=True)
class TurnError:
    kind: str
    message: str
    provider: bool  # transport-level failure (vs. parse/repair failure)


@dataclass(frozen=True)
class Turn:
    query: str
    mode: Mode
    specification: AnalyticSpecification | None
    report: ValidationReport | None  # None only when the provider never answered
    latency_seconds: float
    error: TurnError | None = None


@dataclass
class Session:
    id: str
    dataset: Dataset
    provider: Any
    subset_seed: int
    subset: DataSubset
    json_only: bool = True
    token_budget: int = 8000
    repair_enabled: bool = True
    max_repair_rounds: int = 1
    turns: list[Turn] = field(default_factory=list)

    @property
    def dataset_id(self) -> str:
        return self.dataset.id

    def latest_successful_specification(self) -> AnalyticSpecification | None:
        for turn in reversed(self.turns):
            if (
                turn.specification is not None
                and turn.report is not None
                and turn.report.verdict is not Verdict.INVALID
            ):
                return turn.specification
        return None


def create_session(
    dataset: Dataset,
    seed: int,
    provider: Any,
    *,
    json_only: bool = True,
    token_budget: int = 8000,
    repair_enabled: bool = True,
    max_repair_rounds: int = 1,
    session_id: str | None = None,
) -> Session:
    """New empty session; the data subset is computed once and cached."""
    return Session(
        id=session_id or uuid.uuid4().hex,
        dataset=dataset,
        provider=provider,
        subset_seed=seed,
        subset=subset(dataset, seed),
        json_only=json_only,
        token_budget=token_budget,
        repair_enabled=repair_enabled,
        max_repair_rounds=max_repair_rounds,
    )


def build_prompt_text(session: Session, query: str, mode: Mode) -> str:
    """Render the exact prompt a query would send; used by ask and the CLI."""
    previous = None
    if mode is Mode.FOLLOW_UP:
        previous = session.latest_successful_specification()
        if previous is None:
            raise NoPriorSpecificationError(
                "follow-up requires a prior turn with a specification"
            )
    config = PromptConfig(
        mode=mode,
        json_only=session.json_only,
        token_budget=session.token_budget,
        seed=session.subset_seed,
    )
    return render(assemble(session.subset, [query], config, previous))


def ask(session: Session, query: str, mode: Mode) -> Turn:
    """Run one query through the full pipeline and append the Turn.

    Provider, parse, and repair failures are recorded inside the Turn;
    only precondition violations raise.
    """
    if not query or not query.strip():
        raise EmptyQueryError("query must be non-blank")
    prompt_text = build_prompt_text(session, query, mode)

    specification: AnalyticSpecification | None = None
    report: ValidationReport | None = None
    error: TurnError | None = None
    latency = 0.0

    try:
        completion: Completion = session.provider.complete(prompt_text)
        latency = completion.latency_seconds
        raw = completion.raw_text
        try:
            specification = parse(raw)
            report = validate(specification, session.dataset, query)
        except MalformedJsonError as exc:
            report = report_from_parse_failure(exc)
            error = TurnError(kind="MalformedJson", message=str(exc), provider=False)

        if report.verdict is Verdict.INVALID and session.repair_enabled:
            try:
                result = repair(
                    raw,
                    report,
                    prompt_text,
                    session.provider,
                    session.dataset,
                    query,
                    max_rounds=session.max_repair_rounds,
                )
                specification = result.specification
                report = result.report
                error = None
                latency += sum(c.latency_seconds for c in result.completions)
            except RepairFailedError as exc:
                latency += sum(c.latency_seconds for c in exc.completions)
                specification = None
                report = exc.attempts[-1].report
                error = TurnError(kind="RepairFailed", message=str(exc), provider=False)
    except ProviderError as exc:
        error = TurnError(kind=type(exc).__name__, message=str(exc), provider=True)

    turn = Turn(
        query=query,
        mode=mode,
        specification=specification,
        report=report,
        latency_seconds=latency,
        error=error,
    )
    session.turns.append(turn)
    return turn


def turn_to_dict(turn: Turn) -> dict:
    return {
        "query": turn.query,
        "mode": turn.mode.value,
        "specification": spec_to_dict(turn.specification) if turn.specification else None,
        "explanation": turn.specification.explanation if turn.specification else None,
        "report": report_to_dict(turn.report) if turn.report else None,
        "latency_seconds": turn.latency_seconds,
        "error": (
            {"kind": turn.error.kind, "message": turn.error.message, "provider": turn.error.provider}
            if turn.error
            else None
        ),
    }


def _turn_from_dict(obj: dict) -> Turn:
    spec = None
    if obj.get("specification") is not None:
        spec = spec_from_object(obj["specification"], explanation=obj.get("explanation"))
    error = None
    if obj.get("error") is not None:
        e = obj["error"]
        error = TurnError(kind=e["kind"], message=e["message"], provider=bool(e["provider"]))
    return Turn(
        query=obj["query"],
        mode=Mode(obj["mode"]),
        specification=spec,
        report=report_from_dict(obj["report"]) if obj.get("report") else None,
        latency_seconds=float(obj["latency_seconds"]),
        error=error,
    )


def session_to_dict(session: Session) -> dict:
    return {
        "id": session.id,
        "dataset_id": session.dataset_id,
        "subset_seed": session.subset_seed,
        "turns": [turn_to_dict(t) for t in session.turns],
    }


class SessionStore:
    """One JSON file per session under the state directory.

    Files are written atomically (write-temp-then-rename) after each turn.
    """

    def __init__(self, state_dir: str | Path):
        self.directory = Path(state_dir)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def save(self, session: Session) -> Path:
        target = self.path_for(session.id)
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_text(
            json.dumps(session_to_dict(session), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, target)
        return target

    def load(self, session_id: str, dataset: Dataset, provider: Any) -> Session:
        obj = json.loads(self.path_for(session_id).read_text(encoding="utf-8"))
        if obj["dataset_id"] != dataset.id:
            raise ValueError(
                f"session {session_id} belongs to dataset {obj['dataset_id']!r}, not {dataset.id!r}"
            )
        restored = create_session(
            dataset, int(obj["subset_seed"]), provider, session_id=obj["id"]
        )
        restored.turns.extend(_turn_from_dict(t) for t in obj["turns"])
        return restored

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))
