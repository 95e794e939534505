"""Parse raw LLM replies into analytic specifications and validate them.

The analytic specification is the response contract: an attributeMap (which
dataset attributes the query evoked, and through which phrases), a taskMap
(which analytic tasks were inferred, with their parameters), and a visList
(Vega-Lite chart specifications). Validation checks the specification
against the dataset, the query text, the task taxonomy, and a structural
Vega-Lite subset; every defect becomes a coded finding rather than an
exception so callers can distinguish failure modes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .dataset import Dataset
from .taxonomy import TaskName

MARK_VOCABULARY = ("bar", "line", "point", "tick", "arc", "area", "boxplot", "circle")
CHANNEL_VOCABULARY = ("x", "y", "color", "size", "row", "column", "theta")
VEGA_DATATYPES = ("quantitative", "nominal", "ordinal", "temporal")

CONTRACT_KEYS = ("attributeMap", "taskMap", "visList")


class Severity(str, Enum):
    ERROR = "Error"
    WARNING = "Warning"


class FindingCode(str, Enum):
    MALFORMED_JSON = "MalformedJson"
    UNKNOWN_ATTRIBUTE = "UnknownAttribute"
    UNGROUNDED_PHRASE = "UngroundedPhrase"
    UNKNOWN_TASK = "UnknownTask"
    INVALID_VEGA_LITE = "InvalidVegaLite"
    FIELD_TITLE_MISMATCH = "FieldTitleMismatch"
    EMPTY_VIS_LIST = "EmptyVisList"
    TASK_ATTRIBUTE_ORPHAN = "TaskAttributeOrphan"
    AMBIGUITY_UNDER_COVERAGE = "AmbiguityUnderCoverage"


class Verdict(str, Enum):
    VALID = "Valid"
    VALID_WITH_WARNINGS = "ValidWithWarnings"
    INVALID = "Invalid"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: FindingCode
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    verdict: Verdict
    findings: tuple[Finding, ...]

    @classmethod
    def from_findings(cls, findings: list[Finding]) -> "ValidationReport":
        if any(f.severity is Severity.ERROR for f in findings):
            verdict = Verdict.INVALID
        elif findings:
            verdict = Verdict.VALID_WITH_WARNINGS
        else:
            verdict = Verdict.VALID
        return cls(verdict=verdict, findings=tuple(findings))

    def codes(self) -> list[str]:
        return [f.code.value for f in self.findings]


def merge_reports(*reports: ValidationReport) -> ValidationReport:
    findings: list[Finding] = []
    for report in reports:
        findings.extend(report.findings)
    return ValidationReport.from_findings(findings)


class MalformedJsonError(ValueError):
    """The reply holds no parseable analytic-specification object."""


@dataclass(frozen=True)
class AttributeEntry:
    query_phrase: str = ""
    is_derived: bool = False
    derivation_note: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TaskBinding:
    attributes: tuple[str, ...] = ()
    operator: str | None = None
    values: tuple[Any, ...] | None = None
    inference_type: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class VisSpec:
    """One visList entry, kept verbatim for lossless re-serialization.

    Entries come in two shapes: the canonical wrapped form
    ``{"attributes": [...], "tasks": [...], "vlSpec": {...}}`` and a bare
    Vega-Lite object. Accessors normalize over both.
    """

    raw: Any

    @property
    def _item(self) -> dict | None:
        return self.raw if isinstance(self.raw, dict) else None

    @property
    def vl_spec(self) -> dict | None:
        item = self._item
        if item is None:
            return None
        if "vlSpec" in item:
            inner = item["vlSpec"]
            return inner if isinstance(inner, dict) else None
        return item

    @property
    def mark(self) -> str | None:
        vl = self.vl_spec
        if vl is None:
            return None
        mark = vl.get("mark")
        if isinstance(mark, dict):
            mark = mark.get("type")
        return mark if isinstance(mark, str) else None

    @property
    def encodings(self) -> dict[str, Any]:
        vl = self.vl_spec
        if vl is None:
            return {}
        enc = vl.get("encoding")
        return enc if isinstance(enc, dict) else {}

    @property
    def transforms(self) -> list | None:
        vl = self.vl_spec
        if vl is None:
            return None
        t = vl.get("transform")
        return t if isinstance(t, list) else None

    @property
    def data_url(self) -> str | None:
        vl = self.vl_spec
        if vl is None:
            return None
        data = vl.get("data")
        if isinstance(data, dict) and isinstance(data.get("url"), str):
            return data["url"]
        return None

    @property
    def serves_attributes(self) -> list[str]:
        item = self._item
        if item is None or "vlSpec" not in item:
            return []
        attrs = item.get("attributes")
        return [a for a in attrs if isinstance(a, str)] if isinstance(attrs, list) else []

    @property
    def serves_tasks(self) -> list[str]:
        item = self._item
        if item is None or "vlSpec" not in item:
            return []
        tasks = item.get("tasks")
        return [t for t in tasks if isinstance(t, str)] if isinstance(tasks, list) else []

    def encoded_fields(self) -> set[str]:
        fields: set[str] = set()
        for channel_def in self.encodings.values():
            if isinstance(channel_def, dict) and isinstance(channel_def.get("field"), str):
                fields.add(channel_def["field"])
        return fields


@dataclass(frozen=True)
class AnalyticSpecification:
    attribute_map: dict[str, AttributeEntry]
    task_map: dict[str, tuple[TaskBinding, ...]]
    vis_list: tuple[VisSpec, ...]
    explanation: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def contract_equal(self, other: "AnalyticSpecification") -> bool:
        """Structural equality on the response contract, ignoring prose."""
        return (
            self.attribute_map == other.attribute_map
            and self.task_map == other.task_map
            and self.vis_list == other.vis_list
            and self.extras == other.extras
        )


def _first_balanced_object(text: str) -> tuple[int, int] | None:
    start = text.find("{")
    if start == -1:
        return None
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return start, i + 1
    return None


def _attribute_entry(value: Any) -> AttributeEntry:
    if not isinstance(value, dict):
        return AttributeEntry(query_phrase=str(value))
    phrase = value.get("queryPhrase", "")
    derived = value.get("isDerived", False)
    note = value.get("derivationNote")
    extras = {k: v for k, v in value.items() if k not in ("queryPhrase", "isDerived", "derivationNote")}
    return AttributeEntry(
        query_phrase=phrase if isinstance(phrase, str) else str(phrase),
        is_derived=bool(derived),
        derivation_note=note if isinstance(note, str) else None,
        extras=extras,
    )


def _task_binding(value: Any) -> TaskBinding:
    if not isinstance(value, dict):
        return TaskBinding()
    attrs = value.get("attributes", [])
    if not isinstance(attrs, list):
        attrs = [attrs]
    values = value.get("values")
    extras = {
        k: v
        for k, v in value.items()
        if k not in ("attributes", "operator", "values", "inferenceType")
    }
    operator = value.get("operator")
    inference = value.get("inferenceType")
    return TaskBinding(
        attributes=tuple(str(a) for a in attrs),
        operator=operator if isinstance(operator, str) else None,
        values=tuple(values) if isinstance(values, list) else None,
        inference_type=inference if isinstance(inference, str) else None,
        extras=extras,
    )


def spec_from_object(obj: dict, explanation: str | None = None) -> AnalyticSpecification:
    """Build a specification from an already-decoded response object."""
    for key in CONTRACT_KEYS:
        if key not in obj:
            raise MalformedJsonError(f"response object is missing {key!r}")
    attr_obj, task_obj, vis_obj = obj["attributeMap"], obj["taskMap"], obj["visList"]
    if not isinstance(attr_obj, dict):
        raise MalformedJsonError("attributeMap is not an object")
    if not isinstance(task_obj, dict):
        raise MalformedJsonError("taskMap is not an object")
    if not isinstance(vis_obj, list):
        raise MalformedJsonError("visList is not an array")

    task_map: dict[str, tuple[TaskBinding, ...]] = {}
    for name, bindings in task_obj.items():
        if isinstance(bindings, dict):
            bindings = [bindings]
        if not isinstance(bindings, list):
            bindings = []
        task_map[name] = tuple(_task_binding(b) for b in bindings)

    return AnalyticSpecification(
        attribute_map={name: _attribute_entry(v) for name, v in attr_obj.items()},
        task_map=task_map,
        vis_list=tuple(VisSpec(raw=item) for item in vis_obj),
        explanation=explanation,
        extras={k: v for k, v in obj.items() if k not in CONTRACT_KEYS},
    )


def parse(raw: str) -> AnalyticSpecification:
    """Extract the analytic specification from a raw LLM reply.

    A bare JSON object parses directly. Otherwise the first balanced
    ``{...}`` region is parsed and any prose around it is kept as the
    explanation (explanation-mode replies wrap the object in text).
    """
    stripped = raw.strip()
    try:
        obj = json.loads(stripped)
        if isinstance(obj, dict):
            return spec_from_object(obj)
        raise MalformedJsonError("reply is JSON but not an object")
    except json.JSONDecodeError:
        pass

    region = _first_balanced_object(raw)
    if region is None:
        raise MalformedJsonError("no balanced JSON object in reply")
    start, end = region
    try:
        obj = json.loads(raw[start:end])
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"balanced region is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedJsonError("balanced region is not a JSON object")
    prose = "\n".join(part for part in (raw[:start].strip(), raw[end:].strip()) if part)
    return spec_from_object(obj, explanation=prose or None)


def attribute_entry_to_dict(entry: AttributeEntry) -> dict:
    doc: dict[str, Any] = {"queryPhrase": entry.query_phrase, "isDerived": entry.is_derived}
    if entry.derivation_note is not None:
        doc["derivationNote"] = entry.derivation_note
    doc.update(entry.extras)
    return doc


def task_binding_to_dict(binding: TaskBinding) -> dict:
    doc: dict[str, Any] = {"attributes": list(binding.attributes)}
    if binding.operator is not None:
        doc["operator"] = binding.operator
    if binding.values is not None:
        doc["values"] = list(binding.values)
    if binding.inference_type is not None:
        doc["inferenceType"] = binding.inference_type
    doc.update(binding.extras)
    return doc


def spec_to_dict(spec: AnalyticSpecification) -> dict:
    doc: dict[str, Any] = {
        "attributeMap": {
            name: attribute_entry_to_dict(entry) for name, entry in spec.attribute_map.items()
        },
        "taskMap": {
            name: [task_binding_to_dict(b) for b in bindings]
            for name, bindings in spec.task_map.items()
        },
        "visList": [vis.raw for vis in spec.vis_list],
    }
    doc.update(spec.extras)
    return doc


def serialize_specification(spec: AnalyticSpecification) -> str:
    return json.dumps(spec_to_dict(spec), indent=2, ensure_ascii=False)


def _normalize_title(text: str) -> str:
    return re.sub(r"[^a-z0-9]", "", text.lower())


def _check_vis_structure(index: int, vis: VisSpec, known_fields: set[str]) -> list[Finding]:
    where = f"visList[{index}]"
    vl = vis.vl_spec
    if vl is None:
        return [Finding(Severity.ERROR, FindingCode.INVALID_VEGA_LITE, f"{where}: no Vega-Lite object")]

    findings: list[Finding] = []
    mark = vis.mark
    if mark is None:
        findings.append(
            Finding(Severity.ERROR, FindingCode.INVALID_VEGA_LITE, f"{where}: missing mark")
        )
    elif mark not in MARK_VOCABULARY:
        findings.append(
            Finding(
                Severity.ERROR,
                FindingCode.INVALID_VEGA_LITE,
                f"{where}: mark '{mark}' is not one of {', '.join(MARK_VOCABULARY)}",
            )
        )

    for channel, channel_def in vis.encodings.items():
        if channel not in CHANNEL_VOCABULARY:
            findings.append(
                Finding(
                    Severity.ERROR,
                    FindingCode.INVALID_VEGA_LITE,
                    f"{where}: encoding channel '{channel}' is not one of {', '.join(CHANNEL_VOCABULARY)}",
                )
            )
            continue
        if not isinstance(channel_def, dict):
            findings.append(
                Finding(
                    Severity.ERROR,
                    FindingCode.INVALID_VEGA_LITE,
                    f"{where}: encoding '{channel}' is not an object",
                )
            )
            continue
        dtype = channel_def.get("type")
        if dtype is not None and dtype not in VEGA_DATATYPES:
            findings.append(
                Finding(
                    Severity.ERROR,
                    FindingCode.INVALID_VEGA_LITE,
                    f"{where}: encoding '{channel}' has unknown type '{dtype}'",
                )
            )
        fieldname = channel_def.get("field")
        if isinstance(fieldname, str) and fieldname not in known_fields:
            findings.append(
                Finding(
                    Severity.ERROR,
                    FindingCode.INVALID_VEGA_LITE,
                    f"{where}: field '{fieldname}' resolves to no dataset or derived attribute",
                )
            )
    return findings


def _check_titles(index: int, vis: VisSpec, candidate_names: set[str]) -> list[Finding]:
    findings: list[Finding] = []
    normalized = {_normalize_title(name): name for name in candidate_names}
    for channel, channel_def in vis.encodings.items():
        if not isinstance(channel_def, dict):
            continue
        fieldname = channel_def.get("field")
        axis = channel_def.get("axis")
        title = axis.get("title") if isinstance(axis, dict) else None
        if not isinstance(fieldname, str) or not isinstance(title, str):
            continue
        matched = normalized.get(_normalize_title(title))
        if matched is not None and _normalize_title(matched) != _normalize_title(fieldname):
            findings.append(
                Finding(
                    Severity.WARNING,
                    FindingCode.FIELD_TITLE_MISMATCH,
                    f"visList[{index}]: channel '{channel}' is titled '{title}' "
                    f"(attribute '{matched}') but encodes field '{fieldname}'",
                )
            )
    return findings


def validate(spec: AnalyticSpecification, dataset: Dataset, query: str) -> ValidationReport:
    """Run the ordered structural and grounding checks over one specification."""
    findings: list[Finding] = []
    attr_names = set(dataset.attribute_names)
    derived = {name for name, entry in spec.attribute_map.items() if entry.is_derived}
    known_fields = attr_names | derived

    for name, entry in spec.attribute_map.items():
        if entry.is_derived:
            note = entry.derivation_note or ""
            if not note:
                findings.append(
                    Finding(
                        Severity.ERROR,
                        FindingCode.UNKNOWN_ATTRIBUTE,
                        f"derived attribute '{name}' carries no derivation note",
                    )
                )
            elif not any(a.lower() in note.lower() for a in attr_names):
                findings.append(
                    Finding(
                        Severity.ERROR,
                        FindingCode.UNKNOWN_ATTRIBUTE,
                        f"derivation note for '{name}' names no existing dataset attribute",
                    )
                )
        elif name not in attr_names:
            findings.append(
                Finding(
                    Severity.ERROR,
                    FindingCode.UNKNOWN_ATTRIBUTE,
                    f"attribute '{name}' does not exist in dataset '{dataset.id}'",
                )
            )

    lowered_query = query.lower()
    for name, entry in spec.attribute_map.items():
        if entry.query_phrase and entry.query_phrase.lower() not in lowered_query:
            findings.append(
                Finding(
                    Severity.WARNING,
                    FindingCode.UNGROUNDED_PHRASE,
                    f"phrase '{entry.query_phrase}' mapped to '{name}' does not occur in the query",
                )
            )

    known_tasks = {t.value for t in TaskName}
    for task_name in spec.task_map:
        if task_name not in known_tasks:
            findings.append(
                Finding(
                    Severity.ERROR,
                    FindingCode.UNKNOWN_TASK,
                    f"task '{task_name}' is not one of the seven analytic tasks",
                )
            )

    for task_name, bindings in spec.task_map.items():
        for binding in bindings:
            for attr in binding.attributes:
                if attr not in spec.attribute_map:
                    findings.append(
                        Finding(
                            Severity.ERROR,
                            FindingCode.TASK_ATTRIBUTE_ORPHAN,
                            f"task '{task_name}' references '{attr}' which is absent from attributeMap",
                        )
                    )

    for index, vis in enumerate(spec.vis_list):
        findings.extend(_check_vis_structure(index, vis, known_fields))

    for index, vis in enumerate(spec.vis_list):
        findings.extend(_check_titles(index, vis, known_fields))

    if not spec.vis_list:
        findings.append(
            Finding(Severity.ERROR, FindingCode.EMPTY_VIS_LIST, "visList is empty")
        )

    return ValidationReport.from_findings(findings)


def validate_ambiguity_coverage(
    spec: AnalyticSpecification, candidates: dict[str, list[str]]
) -> ValidationReport:
    """Check that every candidate attribute of an ambiguous phrase is charted."""
    findings: list[Finding] = []
    covered: set[str] = set()
    for vis in spec.vis_list:
        covered |= vis.encoded_fields()
    for phrase, attrs in candidates.items():
        for attr in attrs:
            if attr not in covered:
                findings.append(
                    Finding(
                        Severity.WARNING,
                        FindingCode.AMBIGUITY_UNDER_COVERAGE,
                        f"no visualization encodes candidate '{attr}' for ambiguous phrase '{phrase}'",
                    )
                )
    return ValidationReport.from_findings(findings)


def report_from_parse_failure(exc: MalformedJsonError) -> ValidationReport:
    return ValidationReport.from_findings(
        [Finding(Severity.ERROR, FindingCode.MALFORMED_JSON, str(exc))]
    )


EXEMPLAR_OBJECT: dict[str, Any] = {
    "attributeMap": {
        "<dataset attribute name exactly as it appears in the headers>": {
            "queryPhrase": "<the phrase in the input query that refers to this attribute>",
            "isDerived": False,
            "derivationNote": (
                "<only for a derived attribute: how it is computed and which "
                "existing attributes it is derived from>"
            ),
        }
    },
    "taskMap": {
        "<analytic task name from the analytic task knowledge>": [
            {
                "attributes": ["<attribute names the task operates on>"],
                "operator": "<optional comparison or aggregation operator, for example GT or AVG>",
                "values": ["<optional values mentioned in the query, for filters>"],
                "inferenceType": "<explicit if the query names the task, implicit if it was inferred>",
            }
        ]
    },
    "visList": [
        {
            "attributes": ["<attributes this visualization serves>"],
            "tasks": ["<tasks this visualization serves>"],
            "vlSpec": {
                "mark": "<one of: bar, line, point, tick, arc, area, boxplot, circle>",
                "encoding": {
                    "<channel, one of: x, y, color, size, row, column, theta>": {
                        "field": "<attribute name>",
                        "type": "<quantitative, nominal, ordinal or temporal>",
                        "aggregate": "<optional aggregation function>",
                        "axis": {"title": "<optional axis title>"},
                    }
                },
                "transform": [],
                "data": {"url": "<the dataset url above>"},
            },
        }
    ],
}

EXEMPLAR_RESPONSE = json.dumps(EXEMPLAR_OBJECT, indent=2, ensure_ascii=False)


@dataclass(frozen=True)
class RepairAttempt:
    raw_text: str
    report: ValidationReport


@dataclass(frozen=True)
class RepairResult:
    specification: AnalyticSpecification
    report: ValidationReport
    attempts: tuple[RepairAttempt, ...]
    completions: tuple[Any, ...]


class RepairFailedError(Exception):
    """Every repair round still produced an invalid specification."""

    def __init__(self, attempts: tuple[RepairAttempt, ...], completions: tuple[Any, ...] = ()):
        self.attempts = attempts
        self.completions = completions
        super().__init__(f"repair failed after {len(attempts)} attempts")


def corrective_suffix(report: ValidationReport) -> str:
    errors = [f for f in report.findings if f.severity is Severity.ERROR]
    reasons = "\n".join(f"- {f.code.value}: {f.detail}" for f in errors)
    return (
        "\n\nYour previous response was invalid for the following reasons:\n"
        f"{reasons}\n"
        "Return a corrected response. "
        "Here is the JSON object that the response should be returned as.\n"
        f"{EXEMPLAR_RESPONSE}\n"
        "Do not include any additional prose in your response. I only want to see the JSON."
    )


def repair(
    raw: str,
    report: ValidationReport,
    original_prompt: str,
    provider: Any,
    dataset: Dataset,
    query: str,
    max_rounds: int = 1,
) -> RepairResult:
    """Re-prompt with the error findings appended; one round by default.

    Returns the repaired specification with the full attempt trail, or
    raises RepairFailedError carrying every attempt's report.
    """
    if report.verdict is not Verdict.INVALID:
        raise ValueError("repair requires an Invalid validation report")
    attempts: list[RepairAttempt] = [RepairAttempt(raw_text=raw, report=report)]
    completions: list[Any] = []
    current = report
    for _ in range(max_rounds):
        completion = provider.complete(original_prompt + corrective_suffix(current))
        completions.append(completion)
        try:
            spec = parse(completion.raw_text)
            new_report = validate(spec, dataset, query)
        except MalformedJsonError as exc:
            spec = None
            new_report = report_from_parse_failure(exc)
        attempts.append(RepairAttempt(raw_text=completion.raw_text, report=new_report))
        if spec is not None and new_report.verdict is not Verdict.INVALID:
            return RepairResult(
                specification=spec,
                report=new_report,
                attempts=tuple(attempts),
                completions=tuple(completions),
            )
        current = new_report
    raise RepairFailedError(tuple(attempts), tuple(completions))


def report_to_dict(report: ValidationReport) -> dict:
    return {
        "verdict": report.verdict.value,
        "findings": [
            {"severity": f.severity.value, "code": f.code.value, "detail": f.detail}
            for f in report.findings
        ],
    }


def report_from_dict(obj: dict) -> ValidationReport:
    return ValidationReport(
        verdict=Verdict(obj["verdict"]),
        findings=tuple(
            Finding(
                severity=Severity(f["severity"]),
                code=FindingCode(f["code"]),
                detail=f["detail"],
            )
            for f in obj.get("findings", [])
        ),
    )
