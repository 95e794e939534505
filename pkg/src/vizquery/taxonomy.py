"""In-context knowledge injected into every prompt.

Seven analytic-task definitions and the nine follow-up operation
permutations, loaded from versioned JSON data files shipped with the
package. ``v5`` is the runtime default; ``v1``-``v4`` document the prompt's
lineage and are exercised only by tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

from .dataset import Datatype

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_VERSION = "v5"
VERSIONS = ("v1", "v2", "v3", "v4", "v5")

ENCODING_CHANNELS = ("X axis", "Y axis", "Color", "Size", "Row", "Column", "Theta")


class TaskName(str, Enum):
    CORRELATION = "Correlation"
    DISTRIBUTION = "Distribution"
    DERIVED_VALUE = "DerivedValue"
    TREND = "Trend"
    FILTER = "Filter"
    SORT = "Sort"
    FIND_EXTREMUM = "FindExtremum"


class FollowUpAction(str, Enum):
    ADD = "Add"
    REMOVE = "Remove"
    REPLACE = "Replace"


class FollowUpTarget(str, Enum):
    ATTRIBUTE = "Attribute"
    TASK = "Task"
    VISUALIZATION_TYPE = "VisualizationType"


TASK_ORDER = tuple(TaskName)
FOLLOWUP_ORDER = tuple(
    (action, target) for action in FollowUpAction for target in FollowUpTarget
)


@dataclass(frozen=True)
class EncodingRule:
    channel: str
    allowed_datatypes: tuple[Datatype, ...]

    def __post_init__(self) -> None:
        if self.channel not in ENCODING_CHANNELS:
            raise ValueError(f"unknown encoding channel: {self.channel!r}")
        if not self.allowed_datatypes:
            raise ValueError(f"no datatypes for channel {self.channel!r}")


@dataclass(frozen=True)
class TaskDefinition:
    """One analytic task with all seven documented property groups."""

    name: TaskName
    description: str
    pro_forma_abstract: str
    examples: tuple[str, ...]
    encoding_rules: tuple[EncodingRule, ...]
    encoding_description: str
    recommended_visualizations: tuple[str, ...]

    def __post_init__(self) -> None:
        for label, value in (
            ("description", self.description),
            ("pro_forma_abstract", self.pro_forma_abstract),
            ("examples", self.examples),
            ("encoding_rules", self.encoding_rules),
            ("encoding_description", self.encoding_description),
            ("recommended_visualizations", self.recommended_visualizations),
        ):
            if not value:
                raise ValueError(f"task {self.name.value}: empty {label}")


@dataclass(frozen=True)
class FollowUpOperation:
    action: FollowUpAction
    target: FollowUpTarget
    instructions: str
    examples: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.instructions:
            raise ValueError(f"followup {self.action.value}+{self.target.value}: empty instructions")
        if not self.examples:
            raise ValueError(f"followup {self.action.value}+{self.target.value}: no examples")


def task_to_dict(task: TaskDefinition) -> dict:
    """Canonical JSON object for one task; key order is the documented order."""
    return {
        "name": task.name.value,
        "description": task.description,
        "proFormaAbstract": task.pro_forma_abstract,
        "examples": list(task.examples),
        "encodings": [
            {
                "channel": rule.channel,
                "allowedDatatypes": [d.value for d in rule.allowed_datatypes],
            }
            for rule in task.encoding_rules
        ],
        "encodingDescription": task.encoding_description,
        "recommendedVisualizations": list(task.recommended_visualizations),
    }


def followup_to_dict(op: FollowUpOperation) -> dict:
    return {
        "action": op.action.value,
        "target": op.target.value,
        "instructions": op.instructions,
        "examples": list(op.examples),
    }


def _task_from_dict(obj: dict) -> TaskDefinition:
    return TaskDefinition(
        name=TaskName(obj["name"]),
        description=obj["description"],
        pro_forma_abstract=obj["proFormaAbstract"],
        examples=tuple(obj["examples"]),
        encoding_rules=tuple(
            EncodingRule(
                channel=enc["channel"],
                allowed_datatypes=tuple(Datatype(d) for d in enc["allowedDatatypes"]),
            )
            for enc in obj["encodings"]
        ),
        encoding_description=obj["encodingDescription"],
        recommended_visualizations=tuple(obj["recommendedVisualizations"]),
    )


def _followup_from_dict(obj: dict) -> FollowUpOperation:
    return FollowUpOperation(
        action=FollowUpAction(obj["action"]),
        target=FollowUpTarget(obj["target"]),
        instructions=obj["instructions"],
        examples=tuple(obj["examples"]),
    )


def data_file(version: str = DEFAULT_VERSION) -> Path:
    if version not in VERSIONS:
        raise ValueError(f"unknown taxonomy version: {version!r}")
    return DATA_DIR / f"taxonomy.{version}.json"


@lru_cache(maxsize=None)
def _load_v5() -> tuple[tuple[TaskDefinition, ...], tuple[FollowUpOperation, ...]]:
    doc = json.loads(data_file("v5").read_text(encoding="utf-8"))
    tasks = tuple(_task_from_dict(t) for t in doc["analyticTasks"])
    followups = tuple(_followup_from_dict(f) for f in doc["followUpOperations"])
    if tuple(t.name for t in tasks) != TASK_ORDER:
        raise ValueError("taxonomy data file does not list the seven tasks in order")
    pairs = [(f.action, f.target) for f in followups]
    if pairs != list(FOLLOWUP_ORDER):
        raise ValueError("taxonomy data file does not list the nine follow-up permutations in order")
    return tasks, followups


def builtin_tasks() -> list[TaskDefinition]:
    """The seven built-in analytic tasks, in canonical order."""
    return list(_load_v5()[0])


def builtin_followups() -> list[FollowUpOperation]:
    """The nine built-in follow-up permutations, action-major order."""
    return list(_load_v5()[1])


def _dumps(obj: object) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


def serialize_tasks(tasks: list[TaskDefinition]) -> str:
    if not tasks:
        raise ValueError("no tasks to serialize")
    ordered = sorted(tasks, key=lambda t: TASK_ORDER.index(t.name))
    return _dumps([task_to_dict(t) for t in ordered])


def serialize_followups(followups: list[FollowUpOperation]) -> str:
    if not followups:
        raise ValueError("no follow-up operations to serialize")
    ordered = sorted(followups, key=lambda f: FOLLOWUP_ORDER.index((f.action, f.target)))
    return _dumps([followup_to_dict(f) for f in ordered])


def serialize_taxonomy(
    tasks: list[TaskDefinition], followups: list[FollowUpOperation]
) -> str:
    """Canonical combined document; byte-identical to the v5 data file."""
    if not tasks or not followups:
        raise ValueError("tasks and followups must be non-empty")
    ordered_tasks = sorted(tasks, key=lambda t: TASK_ORDER.index(t.name))
    ordered_fups = sorted(followups, key=lambda f: FOLLOWUP_ORDER.index((f.action, f.target)))
    doc = {
        "analyticTasks": [task_to_dict(t) for t in ordered_tasks],
        "followUpOperations": [followup_to_dict(f) for f in ordered_fups],
    }
    return _dumps(doc) + "\n"
