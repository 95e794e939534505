#!/usr/bin/env python3
"""Regenerate tests/fixtures/replies/pack.json.

One scripted LLM reply per parser/validator failure class, plus the clean
cases, each frozen with the exact finding codes and verdict it must
produce against the movies fixture dataset.
"""

from __future__ import annotations

import json
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
OUT = REPO / "tests" / "fixtures" / "replies" / "pack.json"

URL = "tests/fixtures/data/movies.csv"


def vis(mark: str, encoding: dict, attributes=None, tasks=None, transform=None) -> dict:
    return {
        "attributes": attributes or [],
        "tasks": tasks or [],
        "vlSpec": {
            "mark": mark,
            "encoding": encoding,
            "transform": transform or [],
            "data": {"url": URL},
        },
    }


def reply(attribute_map: dict, task_map: dict, vis_list: list) -> str:
    return json.dumps(
        {"attributeMap": attribute_map, "taskMap": task_map, "visList": vis_list},
        indent=2,
    )


MEAN_GROSS_BY_GENRE = {
    "x": {"field": "Genre", "type": "nominal"},
    "y": {"field": "Worldwide Gross", "type": "quantitative", "aggregate": "mean"},
}

VALID_REPLY = reply(
    {
        "Worldwide Gross": {"queryPhrase": "worldwide gross", "isDerived": False},
        "Genre": {"queryPhrase": "genres", "isDerived": False},
    },
    {
        "DerivedValue": [
            {
                "attributes": ["Worldwide Gross", "Genre"],
                "operator": "AVG",
                "inferenceType": "explicit",
            }
        ]
    },
    [vis("bar", MEAN_GROSS_BY_GENRE, ["Worldwide Gross", "Genre"], ["DerivedValue"])],
)

RATING_CANDIDATES = {
    "rating": ["Content Rating", "Rotten Tomatoes Rating", "IMDb Rating"]
}


def rating_scatter(rating_field: str, rating_type: str) -> dict:
    return vis(
        "point",
        {
            "x": {"field": "Production Budget", "type": "quantitative"},
            "y": {"field": "Worldwide Gross", "type": "quantitative"},
            "color": {"field": rating_field, "type": rating_type},
        },
        ["Production Budget", "Worldwide Gross", rating_field],
        ["Correlation"],
    )


AMBIGUOUS_ATTRIBUTE_MAP = {
    "Production Budget": {"queryPhrase": "budget", "isDerived": False},
    "Worldwide Gross": {"queryPhrase": "gross", "isDerived": False},
    "Content Rating": {"queryPhrase": "rating", "isDerived": False},
    "Rotten Tomatoes Rating": {"queryPhrase": "rating", "isDerived": False},
    "IMDb Rating": {"queryPhrase": "rating", "isDerived": False},
}

AMBIGUOUS_TASK_MAP = {
    "Correlation": [
        {
            "attributes": [
                "Production Budget",
                "Worldwide Gross",
                "Content Rating",
                "Rotten Tomatoes Rating",
                "IMDb Rating",
            ],
            "inferenceType": "explicit",
        }
    ]
}

CASES = [
    {
        "name": "valid",
        "query": "Show average worldwide gross across genres",
        "raw": VALID_REPLY,
        "expected": {"verdict": "Valid", "codes": []},
    },
    {
        "name": "prose_wrapped_valid",
        "query": "Show average worldwide gross across genres",
        "raw": f"Here is the result:\n{VALID_REPLY}\nHope this helps!",
        "expected": {"verdict": "Valid", "codes": [], "explanation": True},
    },
    {
        "name": "truncated_json",
        "query": "Show average worldwide gross across genres",
        "raw": '{"attributeMap": {',
        "expected": {"verdict": "Invalid", "codes": ["MalformedJson"], "parse_error": True},
    },
    {
        "name": "unknown_attribute",
        "query": "Show average horsepower by genre",
        "raw": reply(
            {
                "Horsepwr": {"queryPhrase": "horsepower", "isDerived": False},
                "Genre": {"queryPhrase": "genre", "isDerived": False},
            },
            {"DerivedValue": [{"attributes": ["Genre"], "inferenceType": "implicit"}]},
            [vis("bar", MEAN_GROSS_BY_GENRE)],
        ),
        "expected": {"verdict": "Invalid", "codes": ["UnknownAttribute"]},
    },
    {
        "name": "unknown_task",
        "query": "Cluster movies by genres",
        "raw": reply(
            {"Genre": {"queryPhrase": "genres", "isDerived": False}},
            {"Clustering": [{"attributes": ["Genre"], "inferenceType": "explicit"}]},
            [vis("bar", MEAN_GROSS_BY_GENRE)],
        ),
        "expected": {"verdict": "Invalid", "codes": ["UnknownTask"]},
    },
    {
        "name": "orphan_task_attribute",
        "query": "Count movies by genres",
        "raw": reply(
            {"Genre": {"queryPhrase": "genres", "isDerived": False}},
            {
                "DerivedValue": [
                    {"attributes": ["Worldwide Gross", "Genre"], "inferenceType": "implicit"}
                ]
            },
            [
                vis(
                    "bar",
                    {
                        "x": {"field": "Genre", "type": "nominal"},
                        "y": {"aggregate": "count", "type": "quantitative"},
                    },
                )
            ],
        ),
        "expected": {"verdict": "Invalid", "codes": ["TaskAttributeOrphan"]},
    },
    {
        "name": "invalid_mark",
        "query": "Show average worldwide gross across genres",
        "raw": reply(
            {
                "Worldwide Gross": {"queryPhrase": "worldwide gross", "isDerived": False},
                "Genre": {"queryPhrase": "genres", "isDerived": False},
            },
            {
                "DerivedValue": [
                    {"attributes": ["Worldwide Gross", "Genre"], "inferenceType": "explicit"}
                ]
            },
            [vis("pie3d", MEAN_GROSS_BY_GENRE)],
        ),
        "expected": {"verdict": "Invalid", "codes": ["InvalidVegaLite"]},
    },
    {
        "name": "unresolvable_field",
        "query": "Show average box office by genres",
        "raw": reply(
            {"Genre": {"queryPhrase": "genres", "isDerived": False}},
            {"DerivedValue": [{"attributes": ["Genre"], "inferenceType": "implicit"}]},
            [
                vis(
                    "bar",
                    {
                        "x": {"field": "Genre", "type": "nominal"},
                        "y": {"field": "Box Office", "type": "quantitative", "aggregate": "mean"},
                    },
                )
            ],
        ),
        "expected": {"verdict": "Invalid", "codes": ["InvalidVegaLite"]},
    },
    {
        "name": "field_title_mismatch",
        "query": "Show total profit across genres",
        "raw": reply(
            {
                "Profit": {
                    "queryPhrase": "profit",
                    "isDerived": True,
                    "derivationNote": "Worldwide Gross minus Production Budget",
                },
                "Genre": {"queryPhrase": "genres", "isDerived": False},
            },
            {
                "DerivedValue": [
                    {"attributes": ["Profit", "Genre"], "operator": "SUM", "inferenceType": "explicit"}
                ]
            },
            [
                vis(
                    "bar",
                    {
                        "x": {"field": "Genre", "type": "nominal"},
                        "y": {
                            "field": "Worldwide Gross",
                            "type": "quantitative",
                            "aggregate": "sum",
                            "axis": {"title": "Profit"},
                        },
                    },
                )
            ],
        ),
        "expected": {"verdict": "ValidWithWarnings", "codes": ["FieldTitleMismatch"]},
    },
    {
        "name": "empty_vis_list",
        "query": "Show average worldwide gross across genres",
        "raw": reply(
            {
                "Worldwide Gross": {"queryPhrase": "worldwide gross", "isDerived": False},
                "Genre": {"queryPhrase": "genres", "isDerived": False},
            },
            {
                "DerivedValue": [
                    {"attributes": ["Worldwide Gross", "Genre"], "inferenceType": "explicit"}
                ]
            },
            [],
        ),
        "expected": {"verdict": "Invalid", "codes": ["EmptyVisList"]},
    },
    {
        "name": "derived_attribute_valid",
        "query": "Show average profit by genre",
        "raw": reply(
            {
                "Profit": {
                    "queryPhrase": "profit",
                    "isDerived": True,
                    "derivationNote": "Worldwide Gross minus Production Budget",
                },
                "Genre": {"queryPhrase": "genre", "isDerived": False},
            },
            {
                "DerivedValue": [
                    {"attributes": ["Profit", "Genre"], "operator": "AVG", "inferenceType": "explicit"}
                ]
            },
            [
                vis(
                    "bar",
                    {
                        "x": {"field": "Genre", "type": "nominal"},
                        "y": {
                            "field": "Profit",
                            "type": "quantitative",
                            "aggregate": "mean",
                            "axis": {"title": "Profit"},
                        },
                    },
                    ["Profit", "Genre"],
                    ["DerivedValue"],
                    transform=[
                        {
                            "calculate": "datum['Worldwide Gross'] - datum['Production Budget']",
                            "as": "Profit",
                        }
                    ],
                )
            ],
        ),
        "expected": {"verdict": "Valid", "codes": []},
    },
    {
        "name": "ambiguity_under_coverage",
        "query": "Correlate budget, gross, and rating",
        "ambiguity_candidates": RATING_CANDIDATES,
        "raw": reply(
            AMBIGUOUS_ATTRIBUTE_MAP,
            AMBIGUOUS_TASK_MAP,
            [
                rating_scatter("Rotten Tomatoes Rating", "quantitative"),
                rating_scatter("IMDb Rating", "quantitative"),
            ],
        ),
        "expected": {"verdict": "ValidWithWarnings", "codes": ["AmbiguityUnderCoverage"]},
    },
    {
        "name": "ambiguity_full_coverage",
        "query": "Correlate budget, gross, and rating",
        "ambiguity_candidates": RATING_CANDIDATES,
        "raw": reply(
            AMBIGUOUS_ATTRIBUTE_MAP,
            AMBIGUOUS_TASK_MAP,
            [
                rating_scatter("Content Rating", "nominal"),
                rating_scatter("Rotten Tomatoes Rating", "quantitative"),
                rating_scatter("IMDb Rating", "quantitative"),
            ],
        ),
        "expected": {"verdict": "Valid", "codes": []},
    },
    {
        "name": "ungrounded_phrase",
        "query": "Show the genres",
        "raw": reply(
            {"Genre": {"queryPhrase": "category of film", "isDerived": False}},
            {"Distribution": [{"attributes": ["Genre"], "inferenceType": "implicit"}]},
            [
                vis(
                    "bar",
                    {
                        "x": {"field": "Genre", "type": "nominal"},
                        "y": {"aggregate": "count", "type": "quantitative"},
                    },
                )
            ],
        ),
        "expected": {"verdict": "ValidWithWarnings", "codes": ["UngroundedPhrase"]},
    },
]


def main() -> None:
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        json.dumps({"dataset": "movies", "cases": CASES}, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {OUT} ({len(CASES)} cases)")


if __name__ == "__main__":
    main()
