#!/usr/bin/env python3
"""Regenerate the versioned taxonomy data files under src/vizquery/data/.

The v5 file is the runtime knowledge; v1-v4 preserve the prompt's lineage
for tests (earlier versions carried fewer tasks and fewer properties).
Run from the repo root after editing the content below.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from vizquery.taxonomy import (  # noqa: E402
    EncodingRule,
    FollowUpAction,
    FollowUpOperation,
    FollowUpTarget,
    TaskDefinition,
    TaskName,
    serialize_taxonomy,
    task_to_dict,
)
from vizquery.dataset import Datatype  # noqa: E402

Q = Datatype.QUANTITATIVE
N = Datatype.NOMINAL
O = Datatype.ORDINAL
T = Datatype.TEMPORAL


TASKS = [
    TaskDefinition(
        name=TaskName.CORRELATION,
        description=(
            "Determine whether and how strongly the values of two quantitative "
            "attributes are related to each other."
        ),
        pro_forma_abstract=(
            "Given a set of data cases and two attributes, determine useful "
            "relationships between the values of those attributes."
        ),
        examples=(
            "Show the relationship between production budget and worldwide gross",
            "Is horsepower correlated with fuel efficiency?",
            "Correlate sales and profit",
        ),
        encoding_rules=(
            EncodingRule("X axis", (Q,)),
            EncodingRule("Y axis", (Q,)),
            EncodingRule("Color", (N, O)),
        ),
        encoding_description=(
            "Encode one quantitative attribute on the x channel and the other on "
            "the y channel, both with type quantitative. An optional nominal or "
            "ordinal attribute may be encoded on the color channel to group the "
            "points."
        ),
        recommended_visualizations=("point",),
    ),
    TaskDefinition(
        name=TaskName.DISTRIBUTION,
        description=(
            "Characterize how the values of an attribute are spread over its range."
        ),
        pro_forma_abstract=(
            "Given a set of data cases and a quantitative attribute of interest, "
            "characterize the distribution of that attribute's values over the set."
        ),
        examples=(
            "Show the distribution of IMDb ratings",
            "How are car weights spread out?",
            "Histogram of order quantities",
        ),
        encoding_rules=(
            EncodingRule("X axis", (Q, N, O, T)),
            EncodingRule("Y axis", (Q,)),
        ),
        encoding_description=(
            "Bin the attribute on the x channel (set \"bin\": true for a "
            "quantitative attribute) and encode the record count on the y channel "
            "with \"aggregate\": \"count\". For a compact single-attribute view, "
            "encode the raw attribute alone on the x channel with a tick mark."
        ),
        recommended_visualizations=("bar", "tick"),
    ),
    TaskDefinition(
        name=TaskName.DERIVED_VALUE,
        description=(
            "Compute an aggregated or computed value over one or more attributes, "
            "optionally grouped by a categorical attribute."
        ),
        pro_forma_abstract=(
            "Given a set of data cases and an aggregation function, compute an "
            "aggregate numeric representation of those data cases."
        ),
        examples=(
            "Show average gross across genres",
            "What is the total profit by region?",
            "Mean horsepower for each origin",
        ),
        encoding_rules=(
            EncodingRule("X axis", (N, O, T)),
            EncodingRule("Y axis", (Q,)),
            EncodingRule("Color", (N, O)),
        ),
        encoding_description=(
            "Encode the grouping attribute on the x channel and the aggregated "
            "quantitative attribute on the y channel, setting \"aggregate\" to the "
            "requested function (mean, sum, median, count). A new attribute "
            "computed from existing ones belongs in a calculate transform entry "
            "before it is encoded."
        ),
        recommended_visualizations=("bar",),
    ),
    TaskDefinition(
        name=TaskName.TREND,
        description=(
            "Show how a quantitative attribute changes over an ordered, usually "
            "temporal, attribute."
        ),
        pro_forma_abstract=(
            "Given a set of data cases and a temporal attribute, characterize how "
            "a quantitative attribute changes over time."
        ),
        examples=(
            "Show worldwide gross over the years",
            "How did sales develop month by month?",
            "Trend of average MPG by model year",
        ),
        encoding_rules=(
            EncodingRule("X axis", (T, O)),
            EncodingRule("Y axis", (Q,)),
            EncodingRule("Color", (N,)),
        ),
        encoding_description=(
            "Encode the temporal attribute on the x channel with type temporal and "
            "the measured quantitative attribute on the y channel, aggregating the "
            "y channel when several records share one time value. A nominal "
            "attribute on the color channel splits the chart into one line per "
            "category."
        ),
        recommended_visualizations=("line", "area"),
    ),
    TaskDefinition(
        name=TaskName.FILTER,
        description=(
            "Restrict the data cases to those satisfying conditions on attribute "
            "values before visualizing."
        ),
        pro_forma_abstract=(
            "Given a set of data cases and some conditions on attribute values, "
            "find the data cases satisfying those conditions."
        ),
        examples=(
            "Show movies with worldwide gross over 100 million",
            "Only include cars built in Europe",
            "Sales in the West region during 2017",
        ),
        encoding_rules=(
            EncodingRule("X axis", (Q, N, O, T)),
            EncodingRule("Y axis", (Q, N, O, T)),
        ),
        encoding_description=(
            "Keep the encodings implied by the rest of the query and add one "
            "filter transform entry per stated condition, for example "
            "{\"filter\": \"datum['Worldwide Gross'] > 100000000\"}."
        ),
        recommended_visualizations=("bar", "point", "line"),
    ),
    TaskDefinition(
        name=TaskName.SORT,
        description="Order the data cases by the values of an attribute.",
        pro_forma_abstract=(
            "Given a set of data cases, rank them according to some ordinal metric."
        ),
        examples=(
            "Sort the genres by average gross",
            "Order the regions alphabetically",
            "Rank car origins by mean horsepower",
        ),
        encoding_rules=(
            EncodingRule("X axis", (N, O, T)),
            EncodingRule("Y axis", (Q,)),
        ),
        encoding_description=(
            "Use the encodings implied by the rest of the query and set the "
            "\"sort\" property on the categorical channel, for example "
            "\"sort\": \"-y\" for descending by the encoded y value."
        ),
        recommended_visualizations=("bar",),
    ),
    TaskDefinition(
        name=TaskName.FIND_EXTREMUM,
        description=(
            "Find the data cases with the highest or lowest value of an attribute."
        ),
        pro_forma_abstract=(
            "Given a set of data cases and an attribute of interest, find data "
            "cases possessing extreme values of that attribute."
        ),
        examples=(
            "Which genre has the highest average gross?",
            "Show the five most expensive movies",
            "Which car has the best MPG?",
        ),
        encoding_rules=(
            EncodingRule("X axis", (N, O)),
            EncodingRule("Y axis", (Q,)),
        ),
        encoding_description=(
            "Encode like an aggregated bar chart and sort the categorical channel "
            "by the quantitative value, descending for maxima and ascending for "
            "minima, so the extremum appears first; a window or filter transform "
            "may limit the view to the requested number of records."
        ),
        recommended_visualizations=("bar",),
    ),
]


FOLLOWUPS = [
    FollowUpOperation(
        action=FollowUpAction.ADD,
        target=FollowUpTarget.ATTRIBUTE,
        instructions=(
            "Add the named attribute to the attributeMap with the query phrase "
            "that refers to it, extend the affected taskMap entries with the "
            "attribute, and encode it on a free channel (for example color, size, "
            "row, or column) in every visualization in visList the query targets."
        ),
        examples=("also break it down by genre", "add horsepower to the chart"),
    ),
    FollowUpOperation(
        action=FollowUpAction.ADD,
        target=FollowUpTarget.TASK,
        instructions=(
            "Keep the existing attributeMap entries, add the new analytic task to "
            "the taskMap with the attributes it operates on, and extend or modify "
            "visList so a visualization serves the added task."
        ),
        examples=("also show the trend over time", "now filter to movies released after 2005"),
    ),
    FollowUpOperation(
        action=FollowUpAction.ADD,
        target=FollowUpTarget.VISUALIZATION_TYPE,
        instructions=(
            "Keep the attributeMap and the taskMap unchanged and append a new "
            "Vega-Lite specification to visList whose mark is the requested "
            "visualization type, encoding the already detected attributes."
        ),
        examples=("also show this as a scatterplot", "add a line chart of the same data"),
    ),
    FollowUpOperation(
        action=FollowUpAction.REMOVE,
        target=FollowUpTarget.ATTRIBUTE,
        instructions=(
            "Delete the attribute from the attributeMap, drop it from every "
            "taskMap entry that references it (removing entries left without "
            "attributes), and remove its encodings from every specification in "
            "visList."
        ),
        examples=("remove the color encoding by genre", "drop the year from the chart"),
    ),
    FollowUpOperation(
        action=FollowUpAction.REMOVE,
        target=FollowUpTarget.TASK,
        instructions=(
            "Delete the task from the taskMap, keep attributes still used by other "
            "tasks in the attributeMap, and strip the transforms or encodings in "
            "visList that only served the removed task."
        ),
        examples=("remove the filter on release year", "don't sort the bars anymore"),
    ),
    FollowUpOperation(
        action=FollowUpAction.REMOVE,
        target=FollowUpTarget.VISUALIZATION_TYPE,
        instructions=(
            "Remove the specifications with the named mark from visList, leaving "
            "the attributeMap and the taskMap intact; if every specification would "
            "be removed, keep the most recent one instead."
        ),
        examples=("get rid of the scatterplot", "remove the pie chart"),
    ),
    FollowUpOperation(
        action=FollowUpAction.REPLACE,
        target=FollowUpTarget.ATTRIBUTE,
        instructions=(
            "Replace the old attribute with the new one in the attributeMap (with "
            "the new query phrase), substitute it inside every taskMap entry, and "
            "rebind the affected encodings in visList, updating the encoding type "
            "to the new attribute's datatype."
        ),
        examples=("use production budget instead of gross", "swap genre for content rating"),
    ),
    FollowUpOperation(
        action=FollowUpAction.REPLACE,
        target=FollowUpTarget.TASK,
        instructions=(
            "Remove the old task from the taskMap, add the replacement task with "
            "the relevant attributes, and regenerate visList so the charts serve "
            "the replacement task under its recommended visualizations."
        ),
        examples=(
            "show the distribution instead of the average",
            "instead of sorting, filter to the top 10",
        ),
    ),
    FollowUpOperation(
        action=FollowUpAction.REPLACE,
        target=FollowUpTarget.VISUALIZATION_TYPE,
        instructions=(
            "Keep the attributeMap and the taskMap as they are and change the mark "
            "of the targeted specification in visList to the requested "
            "visualization type, adjusting encodings the new mark requires."
        ),
        examples=("make it a line chart instead", "turn the bar chart into a scatterplot"),
    ),
]

V1_TASKS = (TaskName.CORRELATION, TaskName.DISTRIBUTION, TaskName.DERIVED_VALUE, TaskName.TREND)
V1_KEYS = ("name", "description", "proFormaAbstract", "encodings")
V2_KEYS = V1_KEYS + ("examples", "recommendedVisualizations")


def _subset_doc(names: tuple[TaskName, ...], keys: tuple[str, ...]) -> dict:
    tasks = [t for t in TASKS if t.name in names]
    return {
        "analyticTasks": [
            {k: v for k, v in task_to_dict(t).items() if k in keys} for t in tasks
        ]
    }


def main() -> None:
    out = REPO / "src" / "vizquery" / "data"
    out.mkdir(parents=True, exist_ok=True)

    full_tasks = {"analyticTasks": [task_to_dict(t) for t in TASKS]}
    files = {
        "taxonomy.v1.json": _subset_doc(V1_TASKS, V1_KEYS),
        "taxonomy.v2.json": _subset_doc(V1_TASKS, V2_KEYS),
        "taxonomy.v3.json": full_tasks,
        "taxonomy.v4.json": full_tasks,
    }
    for name, doc in files.items():
        (out / name).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    (out / "taxonomy.v5.json").write_text(serialize_taxonomy(TASKS, FOLLOWUPS), encoding="utf-8")
    for name in sorted(p.name for p in out.glob("taxonomy.*.json")):
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
