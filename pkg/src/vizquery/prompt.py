"""Deterministic prompt composition.

Assembles the complete prompt sent to the LLM: task knowledge, follow-up
knowledge, per-query-type instructions, the response exemplar, the data
subset, an optional previous specification, and the queries. Identical
inputs always render to identical bytes, which is what makes golden-file
pinning and offline replay possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dataset import DataSubset, render_subset
from .response import EXEMPLAR_RESPONSE, AnalyticSpecification, serialize_specification
from .taxonomy import (
    DEFAULT_VERSION,
    builtin_followups,
    builtin_tasks,
    serialize_followups,
    serialize_tasks,
)


class Mode(str, Enum):
    INITIAL = "Initial"
    FOLLOW_UP = "FollowUp"


class SectionId(str, Enum):
    TASK_TAXONOMY = "TaskTaxonomy"
    FOLLOWUP_TAXONOMY = "FollowUpTaxonomy"
    INSTRUCTIONS = "Instructions"
    RESPONSE_SCHEMA_EXAMPLE = "ResponseSchemaExample"
    DATA_SUBSET = "DataSubset"
    PREVIOUS_SPECIFICATION = "PreviousSpecification"
    QUERIES = "Queries"


SECTION_ORDER = tuple(SectionId)

SECTION_HEADERS = {
    SectionId.TASK_TAXONOMY: "## Analytic Task Knowledge",
    SectionId.FOLLOWUP_TAXONOMY: "## Follow-Up Operation Knowledge",
    SectionId.INSTRUCTIONS: "## Instructions",
    SectionId.RESPONSE_SCHEMA_EXAMPLE: "## Response Format",
    SectionId.DATA_SUBSET: "## Data",
    SectionId.PREVIOUS_SPECIFICATION: "## Previous Analytic Specification",
    SectionId.QUERIES: "## Queries",
}

SECTION_SEPARATOR = "\n\n"

INITIAL_KEY_INSTRUCTION = (
    "Using the analytic task knowledge above, classify the below natural "
    "language queries into the respective analytic tasks they map to. There "
    "can be one or more analytic tasks detected in the input natural language "
    "query. Return the visualization type in the form of a Vega-Lite "
    "specification where it reads data from the url above."
)

FOLLOWUP_KEY_INSTRUCTION = (
    "Using the follow-up operation knowledge above, classify the below "
    "natural language query into the respective follow-up operations they "
    "map to. Utilize the previous analytic specification (including the "
    "attributeMap, taskMap, and visList) and modify this specification to "
    "reflect the changes specified and requested in the natural language "
    "query. Return the visualization type in the form of a Vega-Lite "
    "specification where it reads data from the url above."
)

QUERY_TYPE_BLOCKS = (
    "- Fully specified queries: when the query explicitly names at least one "
    "attribute, analytic task, and visualization type, the instruction above "
    "covers it directly.",
    "- Underspecified queries: when the query does not contain explicit "
    "references to tasks or visualizations, use the design guidelines in the "
    "analytic task knowledge above, infer the task that is best suited with "
    "the detected attributes' datatypes, and generate a visualization "
    "specification using this inferred task and detected attributes.",
    "- Ambiguous queries: when the query contains a keyword with partial "
    "references to multiple data attributes, output multiple visualizations, "
    "one for every attribute that the keyword potentially refers to, to "
    "maximally cover the user's intent.",
    "- Follow-up queries: when a previous analytic specification is provided "
    "below, apply the follow-up operation knowledge above to that "
    "specification instead of building a new one from scratch.",
)

JSON_ONLY_SENTENCE = (
    "Do not include any additional prose in your response. "
    "I only want to see the JSON."
)

RESPONSE_SCHEMA_INTRO = (
    "Here is the JSON object that the response should be returned as. The "
    "value of each property describes what that property must contain."
)


class EmptyQueryError(ValueError):
    """A query is missing or blank."""


class MissingPreviousSpecError(ValueError):
    """Follow-up assembly requires the previous analytic specification."""


class TokenBudgetExceededError(ValueError):
    """The rendered prompt does not fit the configured token budget.

    The caller must shrink the data subset or raise the budget.
    """

    def __init__(self, estimated: int, budget: int):
        self.estimated = estimated
        self.budget = budget
        super().__init__(f"prompt estimates {estimated} tokens, budget is {budget}")


@dataclass(frozen=True)
class PromptConfig:
    mode: Mode = Mode.INITIAL
    json_only: bool = True
    token_budget: int = 8000
    seed: int = 0
    taxonomy_version: str = DEFAULT_VERSION

    def __post_init__(self) -> None:
        if self.token_budget <= 0:
            raise ValueError("token_budget must be positive")
        if self.taxonomy_version != DEFAULT_VERSION:
            raise ValueError(
                f"only taxonomy version {DEFAULT_VERSION!r} is a runtime mode"
            )


@dataclass(frozen=True)
class AssembledPrompt:
    sections: tuple[tuple[SectionId, str], ...]
    estimated_tokens: int
    config_snapshot: PromptConfig

    def section(self, section_id: SectionId) -> str | None:
        for sid, body in self.sections:
            if sid is section_id:
                return body
        return None


def estimate_tokens(text: str) -> int:
    """Conservative offline token estimate: ceil(utf-8 bytes / 4)."""
    return math.ceil(len(text.encode("utf-8")) / 4)


def _instructions_body(config: PromptConfig) -> str:
    key = INITIAL_KEY_INSTRUCTION if config.mode is Mode.INITIAL else FOLLOWUP_KEY_INSTRUCTION
    parts = [key, "Handle each query according to its type:", "\n".join(QUERY_TYPE_BLOCKS)]
    if config.json_only:
        parts.append(JSON_ONLY_SENTENCE)
    return "\n\n".join(parts)


def _data_body(subset: DataSubset) -> str:
    return (
        f"The dataset can be read from the url: {subset.source}\n"
        "All dataset headers and a random sample of its rows follow:\n\n"
        "```\n"
        f"{render_subset(subset)}\n"
        "```"
    )


def _queries_body(queries: list[str]) -> str:
    return "\n".join(f"{i}. {q}" for i, q in enumerate(queries, start=1))


def assemble(
    subset: DataSubset,
    queries: list[str],
    config: PromptConfig,
    previous: AnalyticSpecification | None = None,
) -> AssembledPrompt:
    """Compose all prompt sections in their fixed order.

    Raises EmptyQueryError, MissingPreviousSpecError, or
    TokenBudgetExceededError; never emits a prompt over budget.
    """
    if not queries:
        raise EmptyQueryError("at least one query is required")
    for q in queries:
        if not q or not q.strip():
            raise EmptyQueryError("queries must be non-blank")
    if config.mode is Mode.FOLLOW_UP and previous is None:
        raise MissingPreviousSpecError(
            "follow-up prompts require the previous analytic specification"
        )

    tasks_json = serialize_tasks(builtin_tasks())
    followups_json = serialize_followups(builtin_followups())

    sections: list[tuple[SectionId, str]] = [
        (
            SectionId.TASK_TAXONOMY,
            "The following JSON describes seven low-level analytic tasks, the "
            "visual encodings suited to each, and the visualization types "
            "recommended for each. Apply this knowledge when interpreting the "
            "natural language queries below.\n\n" + tasks_json,
        ),
        (
            SectionId.FOLLOWUP_TAXONOMY,
            "The following JSON array describes the follow-up operations that "
            "modify a previously generated analytic specification. Each entry "
            "pairs an action (Add, Remove, Replace) with a target (Attribute, "
            "Task, VisualizationType), the steps to perform it, and example "
            "follow-up queries.\n\n" + followups_json,
        ),
        (SectionId.INSTRUCTIONS, _instructions_body(config)),
        (
            SectionId.RESPONSE_SCHEMA_EXAMPLE,
            RESPONSE_SCHEMA_INTRO + "\n\n" + EXEMPLAR_RESPONSE,
        ),
        (SectionId.DATA_SUBSET, _data_body(subset)),
    ]
    if config.mode is Mode.FOLLOW_UP:
        sections.append(
            (SectionId.PREVIOUS_SPECIFICATION, serialize_specification(previous))
        )
    sections.append((SectionId.QUERIES, _queries_body(queries)))

    prompt = AssembledPrompt(
        sections=tuple(sections),
        estimated_tokens=0,
        config_snapshot=config,
    )
    estimated = estimate_tokens(render(prompt))
    if estimated > config.token_budget:
        raise TokenBudgetExceededError(estimated, config.token_budget)
    return AssembledPrompt(
        sections=tuple(sections),
        estimated_tokens=estimated,
        config_snapshot=config,
    )


def render(prompt: AssembledPrompt) -> str:
    """Flatten sections to the final prompt text; pure and byte-deterministic."""
    blocks = [
        f"{SECTION_HEADERS[sid]}\n\n{body}" for sid, body in prompt.sections
    ]
    return SECTION_SEPARATOR.join(blocks) + "\n"
