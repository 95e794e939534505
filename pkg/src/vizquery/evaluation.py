"""Corpus replay, human annotation bookkeeping, and accuracy/latency metrics.

The harness runs query corpora through the pipeline and records outcomes;
accuracy is a human judgment, so labels enter via annotation files and a
two-annotator-plus-tiebreaker reconciliation step. The harness never
fabricates labels; validation reports ride along as annotator aids only.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal
from enum import Enum
from pathlib import Path
from typing import Any

from .dataset import Dataset
from .prompt import Mode
from .response import (
    ValidationReport,
    merge_reports,
    report_from_dict,
    report_to_dict,
    spec_to_dict,
    validate_ambiguity_coverage,
)
from .session import NoPriorSpecificationError, ask, create_session


class Label(str, Enum):
    ACCURATE = "Accurate"
    INACCURATE = "Inaccurate"
    NO_OUTPUT = "NoOutput"


class Reason(str, Enum):
    MISSING_TASK = "MissingTask"
    MISSING_ATTRIBUTE = "MissingAttribute"
    INCORRECT_ATTRIBUTE = "IncorrectAttribute"
    MALFORMED_OUTPUT = "MalformedOutput"
    INVALID_VEGA_LITE = "InvalidVegaLite"
    OTHER = "Other"


class UnknownDatasetError(KeyError):
    pass


class EmptyCorpusError(ValueError):
    pass


class MissingAnnotationError(ValueError):
    pass


class MissingTiebreakerError(ValueError):
    pass


class UnreconciledCasesError(ValueError):
    pass


@dataclass(frozen=True)
class QueryCase:
    case_id: str
    dataset_id: str
    query: str
    mode: Mode = Mode.INITIAL
    sequence_group: str | None = None
    ambiguity_candidates: dict[str, list[str]] | None = None

    def __post_init__(self) -> None:
        if self.mode is Mode.FOLLOW_UP and not self.sequence_group:
            raise ValueError(
                f"case {self.case_id}: follow-up cases must name their sequence_group"
            )


@dataclass(frozen=True)
class Annotation:
    case_id: str
    annotator_id: str
    label: Label
    reasons: tuple[Reason, ...] = ()
    note: str | None = None

    def __post_init__(self) -> None:
        if self.label is Label.INACCURATE and not self.reasons:
            raise ValueError(f"case {self.case_id}: inaccurate annotations need reasons")
        if self.label is Label.ACCURATE and self.reasons:
            raise ValueError(f"case {self.case_id}: accurate annotations carry no reasons")


@dataclass
class CaseRecord:
    case_id: str
    dataset_id: str
    mode: Mode
    status: str  # "ok" | "error" | "no_output"
    latency_seconds: float
    report: ValidationReport | None = None
    specification: dict | None = None
    error: dict | None = None
    note: str | None = None


@dataclass(frozen=True)
class AccuracyCount:
    accurate: int
    total: int
    accuracy_pct: float


@dataclass(frozen=True)
class ReconciliationEntry:
    case_id: str
    annotator_labels: dict[str, str]
    final_label: Label
    tiebreaker_used: bool


@dataclass
class RunReport:
    run_id: str
    records: list[CaseRecord] = field(default_factory=list)
    overall_accuracy: AccuracyCount | None = None
    per_dataset_accuracy: dict[str, AccuracyCount] | None = None
    mean_latency_seconds: float | None = None
    counts: dict[str, int] | None = None
    reconciliation: list[ReconciliationEntry] | None = None


def percentage(numerator: int, denominator: int) -> float:
    """Accuracy display value: percent truncated to two decimals.

    Truncation (not half-up) is what reproduces the published figures:
    644/740 must read 87.02, and half-up would say 87.03.
    """
    if denominator == 0:
        return 0.0
    pct = Decimal(numerator * 100) / Decimal(denominator)
    return float(pct.quantize(Decimal("0.01"), rounding=ROUND_DOWN))


def run_corpus(
    corpus: list[QueryCase],
    dataset_registry: dict[str, Dataset],
    provider: Any,
    seed: int,
    repair_enabled: bool = False,
) -> RunReport:
    """Replay every case; follow-up chains share one session per group.

    A follow-up whose predecessor produced no specification is recorded as
    no_output with a BrokenChain note instead of aborting the run.
    """
    if not corpus:
        raise EmptyCorpusError("corpus holds no cases")
    for case in corpus:
        if case.dataset_id not in dataset_registry:
            raise UnknownDatasetError(f"case {case.case_id}: unknown dataset {case.dataset_id!r}")

    sessions: dict[str, Any] = {}
    report = RunReport(run_id=uuid.uuid4().hex)
    for index, case in enumerate(corpus):
        dataset = dataset_registry[case.dataset_id]
        group_key = case.sequence_group or f"__solo_{index}"
        session = sessions.get(group_key)
        if session is None:
            session = create_session(
                dataset, seed, provider, repair_enabled=repair_enabled
            )
            sessions[group_key] = session
        elif session.dataset_id != case.dataset_id:
            raise ValueError(
                f"sequence group {case.sequence_group!r} spans datasets "
                f"{session.dataset_id!r} and {case.dataset_id!r}"
            )

        try:
            turn = ask(session, case.query, case.mode)
        except NoPriorSpecificationError:
            report.records.append(
                CaseRecord(
                    case_id=case.case_id,
                    dataset_id=case.dataset_id,
                    mode=case.mode,
                    status="no_output",
                    latency_seconds=0.0,
                    note="BrokenChain: predecessor produced no specification",
                )
            )
            continue

        turn_report = turn.report
        if turn.specification is not None and case.ambiguity_candidates:
            turn_report = merge_reports(
                turn_report,
                validate_ambiguity_coverage(turn.specification, case.ambiguity_candidates),
            )
        report.records.append(
            CaseRecord(
                case_id=case.case_id,
                dataset_id=case.dataset_id,
                mode=case.mode,
                status="error" if turn.error else "ok",
                latency_seconds=turn.latency_seconds,
                report=turn_report,
                specification=spec_to_dict(turn.specification) if turn.specification else None,
                error=(
                    {"kind": turn.error.kind, "message": turn.error.message, "provider": turn.error.provider}
                    if turn.error
                    else None
                ),
            )
        )
    return report


def reconcile(
    annotations: list[Annotation], tiebreaker_id: str
) -> tuple[dict[str, Label], list[ReconciliationEntry]]:
    """Two primary annotators per case; the tiebreaker settles disagreements."""
    by_case: dict[str, list[Annotation]] = {}
    for ann in annotations:
        by_case.setdefault(ann.case_id, []).append(ann)

    final: dict[str, Label] = {}
    entries: list[ReconciliationEntry] = []
    for case_id, anns in by_case.items():
        primaries = [a for a in anns if a.annotator_id != tiebreaker_id]
        tiebreakers = [a for a in anns if a.annotator_id == tiebreaker_id]
        if len(primaries) != 2:
            raise MissingAnnotationError(
                f"case {case_id}: expected 2 primary annotations, found {len(primaries)}"
            )
        first, second = primaries
        labels = {a.annotator_id: a.label.value for a in primaries}
        if first.label is second.label:
            final_label, used = first.label, False
        else:
            if not tiebreakers:
                raise MissingTiebreakerError(
                    f"case {case_id}: annotators disagree and no tiebreaker annotation exists"
                )
            final_label, used = tiebreakers[0].label, True
            labels[tiebreaker_id] = tiebreakers[0].label.value
        final[case_id] = final_label
        entries.append(
            ReconciliationEntry(
                case_id=case_id,
                annotator_labels=labels,
                final_label=final_label,
                tiebreaker_used=used,
            )
        )
    return final, entries


def score(
    report: RunReport,
    final_labels: dict[str, Label],
    reconciliation: list[ReconciliationEntry] | None = None,
) -> RunReport:
    """Fill the accuracy and latency metrics once every case is reconciled."""
    missing = [r.case_id for r in report.records if r.case_id not in final_labels]
    if missing:
        raise UnreconciledCasesError(f"cases without final labels: {missing}")

    by_dataset: dict[str, list[str]] = {}
    for record in report.records:
        by_dataset.setdefault(record.dataset_id, []).append(record.case_id)

    def count(case_ids: list[str]) -> AccuracyCount:
        accurate = sum(1 for cid in case_ids if final_labels[cid] is Label.ACCURATE)
        return AccuracyCount(accurate, len(case_ids), percentage(accurate, len(case_ids)))

    all_ids = [r.case_id for r in report.records]
    label_counts: dict[str, int] = {label.value: 0 for label in Label}
    for cid in all_ids:
        label_counts[final_labels[cid].value] += 1

    return RunReport(
        run_id=report.run_id,
        records=report.records,
        overall_accuracy=count(all_ids),
        per_dataset_accuracy={ds: count(ids) for ds, ids in sorted(by_dataset.items())},
        mean_latency_seconds=(
            sum(r.latency_seconds for r in report.records) / len(report.records)
        ),
        counts=label_counts,
        reconciliation=reconciliation,
    )


def case_to_dict(case: QueryCase) -> dict:
    doc: dict[str, Any] = {
        "case_id": case.case_id,
        "dataset_id": case.dataset_id,
        "query": case.query,
        "mode": case.mode.value,
    }
    if case.sequence_group is not None:
        doc["sequence_group"] = case.sequence_group
    if case.ambiguity_candidates is not None:
        doc["ambiguity_candidates"] = case.ambiguity_candidates
    return doc


def case_from_dict(obj: dict) -> QueryCase:
    return QueryCase(
        case_id=obj["case_id"],
        dataset_id=obj["dataset_id"],
        query=obj["query"],
        mode=Mode(obj.get("mode", "Initial")),
        sequence_group=obj.get("sequence_group"),
        ambiguity_candidates=obj.get("ambiguity_candidates"),
    )


def load_corpus(path: str | Path) -> list[QueryCase]:
    cases = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            cases.append(case_from_dict(json.loads(line)))
    return cases


def save_corpus(cases: list[QueryCase], path: str | Path) -> None:
    lines = [json.dumps(case_to_dict(c), ensure_ascii=False) for c in cases]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def annotation_to_dict(ann: Annotation) -> dict:
    doc: dict[str, Any] = {
        "case_id": ann.case_id,
        "annotator_id": ann.annotator_id,
        "label": ann.label.value,
        "reasons": [r.value for r in ann.reasons],
    }
    if ann.note is not None:
        doc["note"] = ann.note
    return doc


def annotation_from_dict(obj: dict) -> Annotation:
    return Annotation(
        case_id=obj["case_id"],
        annotator_id=obj["annotator_id"],
        label=Label(obj["label"]),
        reasons=tuple(Reason(r) for r in obj.get("reasons", [])),
        note=obj.get("note"),
    )


def load_annotations(path: str | Path) -> list[Annotation]:
    annotations = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            annotations.append(annotation_from_dict(json.loads(line)))
    return annotations


def record_to_dict(record: CaseRecord) -> dict:
    return {
        "case_id": record.case_id,
        "dataset_id": record.dataset_id,
        "mode": record.mode.value,
        "status": record.status,
        "latency_seconds": record.latency_seconds,
        "report": report_to_dict(record.report) if record.report else None,
        "specification": record.specification,
        "error": record.error,
        "note": record.note,
    }


def record_from_dict(obj: dict) -> CaseRecord:
    return CaseRecord(
        case_id=obj["case_id"],
        dataset_id=obj["dataset_id"],
        mode=Mode(obj["mode"]),
        status=obj["status"],
        latency_seconds=float(obj["latency_seconds"]),
        report=report_from_dict(obj["report"]) if obj.get("report") else None,
        specification=obj.get("specification"),
        error=obj.get("error"),
        note=obj.get("note"),
    )


def _accuracy_to_dict(acc: AccuracyCount | None) -> dict | None:
    if acc is None:
        return None
    return {"accurate": acc.accurate, "total": acc.total, "accuracy_pct": acc.accuracy_pct}


def _accuracy_from_dict(obj: dict | None) -> AccuracyCount | None:
    if obj is None:
        return None
    return AccuracyCount(int(obj["accurate"]), int(obj["total"]), float(obj["accuracy_pct"]))


def report_to_json_dict(report: RunReport) -> dict:
    return {
        "run_id": report.run_id,
        "records": [record_to_dict(r) for r in report.records],
        "overall_accuracy": _accuracy_to_dict(report.overall_accuracy),
        "per_dataset_accuracy": (
            {ds: _accuracy_to_dict(a) for ds, a in report.per_dataset_accuracy.items()}
            if report.per_dataset_accuracy is not None
            else None
        ),
        "mean_latency_seconds": report.mean_latency_seconds,
        "counts": report.counts,
        "reconciliation": (
            [
                {
                    "case_id": e.case_id,
                    "annotator_labels": e.annotator_labels,
                    "final_label": e.final_label.value,
                    "tiebreaker_used": e.tiebreaker_used,
                }
                for e in report.reconciliation
            ]
            if report.reconciliation is not None
            else None
        ),
    }


def report_from_json_dict(obj: dict) -> RunReport:
    return RunReport(
        run_id=obj["run_id"],
        records=[record_from_dict(r) for r in obj["records"]],
        overall_accuracy=_accuracy_from_dict(obj.get("overall_accuracy")),
        per_dataset_accuracy=(
            {ds: _accuracy_from_dict(a) for ds, a in obj["per_dataset_accuracy"].items()}
            if obj.get("per_dataset_accuracy") is not None
            else None
        ),
        mean_latency_seconds=obj.get("mean_latency_seconds"),
        counts=obj.get("counts"),
        reconciliation=(
            [
                ReconciliationEntry(
                    case_id=e["case_id"],
                    annotator_labels=e["annotator_labels"],
                    final_label=Label(e["final_label"]),
                    tiebreaker_used=bool(e["tiebreaker_used"]),
                )
                for e in obj["reconciliation"]
            ]
            if obj.get("reconciliation") is not None
            else None
        ),
    )


def save_report(report: RunReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_json_dict(report), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_report(path: str | Path) -> RunReport:
    return report_from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))
