"""Shared fixtures: frozen datasets, golden paths, and reply scripting."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from vizquery.dataset import Dataset, ingest, subset
from vizquery.llm import prompt_digest
from vizquery.prompt import Mode, PromptConfig, assemble, render
from vizquery.response import (
    MalformedJsonError,
    Verdict,
    parse,
    spec_from_object,
    validate,
)

FIXTURES = Path(__file__).resolve().parent / "fixtures"
REPO = FIXTURES.parent.parent
DATA_DIR = FIXTURES / "data"
GOLDEN_PROMPTS = FIXTURES / "golden" / "prompts"
REPLIES_DIR = FIXTURES / "replies"


def ingest_fixture(name: str) -> Dataset:
    """Ingest a fixture CSV with its repo-relative path pinned as the source.

    Pinning keeps rendered prompts byte-identical no matter where pytest
    runs from.
    """
    rel = f"tests/fixtures/data/{name}.csv"
    return ingest(REPO / rel, "csv", source_label=rel)


def load_prev_spec(name: str):
    path = FIXTURES / "specs" / f"{name}.prev.json"
    return spec_from_object(json.loads(path.read_text(encoding="utf-8")))


@pytest.fixture(scope="session")
def prompt_grid() -> dict:
    return json.loads((FIXTURES / "prompt_cases.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def movies() -> Dataset:
    return ingest_fixture("movies")


@pytest.fixture(scope="session")
def cars() -> Dataset:
    return ingest_fixture("cars")


@pytest.fixture(scope="session")
def superstore() -> Dataset:
    return ingest_fixture("superstore")


MOVIES_URL = "tests/fixtures/data/movies.csv"


def vis_entry(
    mark: str,
    encoding: dict,
    url: str = MOVIES_URL,
    attributes: list[str] | None = None,
    tasks: list[str] | None = None,
    transform: list | None = None,
) -> dict:
    return {
        "attributes": attributes or [],
        "tasks": tasks or [],
        "vlSpec": {
            "mark": mark,
            "encoding": encoding,
            "transform": transform or [],
            "data": {"url": url},
        },
    }


def reply_text(attribute_map: dict, task_map: dict, vis_list: list) -> str:
    return json.dumps(
        {"attributeMap": attribute_map, "taskMap": task_map, "visList": vis_list},
        indent=2,
    )


def derived_value_reply(
    url: str = MOVIES_URL, with_color: bool = True, query_phrases: dict | None = None
) -> str:
    """A well-formed aggregate bar chart over the movies fixture."""
    phrases = query_phrases or {"Worldwide Gross": "gross", "Genre": "genres"}
    encoding = {
        "x": {"field": "Genre", "type": "nominal"},
        "y": {"field": "Worldwide Gross", "type": "quantitative", "aggregate": "mean"},
    }
    if with_color:
        encoding["color"] = {"field": "Genre", "type": "nominal"}
    return reply_text(
        attribute_map={
            "Worldwide Gross": {"queryPhrase": phrases["Worldwide Gross"], "isDerived": False},
            "Genre": {"queryPhrase": phrases["Genre"], "isDerived": False},
        },
        task_map={
            "DerivedValue": [
                {
                    "attributes": ["Worldwide Gross", "Genre"],
                    "operator": "AVG",
                    "inferenceType": "explicit",
                }
            ]
        },
        vis_list=[
            vis_entry(
                "bar",
                encoding,
                url=url,
                attributes=["Worldwide Gross", "Genre"],
                tasks=["DerivedValue"],
            )
        ],
    )


def script_conversation(
    fixtures: dict,
    dataset: Dataset,
    seed: int,
    steps: list[tuple[str, Mode, object]],
    json_only: bool = True,
    token_budget: int = 8000,
) -> None:
    """Register digest-keyed scripted replies for a turn sequence.

    Mirrors the session's prompt assembly (same subset, same config, same
    previous-specification threading) so the digests the pipeline computes
    match the ones registered here.
    """
    sub = subset(dataset, seed)
    previous = None
    for query, mode, entry in steps:
        config = PromptConfig(mode=mode, json_only=json_only, token_budget=token_budget, seed=seed)
        prompt_text = render(
            assemble(sub, [query], config, previous if mode is Mode.FOLLOW_UP else None)
        )
        fixtures[prompt_digest(prompt_text)] = entry
        if isinstance(entry, str):
            try:
                spec = parse(entry)
            except MalformedJsonError:
                continue
            if validate(spec, dataset, query).verdict is not Verdict.INVALID:
                previous = spec
