"""The built-in task and follow-up knowledge and its canonical serialization."""

from __future__ import annotations

import json

import pytest

from vizquery.dataset import Datatype
from vizquery.response import MARK_VOCABULARY
from vizquery.taxonomy import (
    ENCODING_CHANNELS,
    EncodingRule,
    FollowUpAction,
    FollowUpOperation,
    FollowUpTarget,
    TaskDefinition,
    TaskName,
    builtin_followups,
    builtin_tasks,
    data_file,
    serialize_followups,
    serialize_taxonomy,
    serialize_tasks,
)

EXPECTED_TASK_NAMES = [
    "Correlation",
    "Distribution",
    "DerivedValue",
    "Trend",
    "Filter",
    "Sort",
    "FindExtremum",
]


class TestBuiltinTasks:
    def test_exactly_seven_in_order(self):
        assert [t.name.value for t in builtin_tasks()] == EXPECTED_TASK_NAMES

    def test_all_property_groups_non_empty(self):
        for task in builtin_tasks():
            assert task.description
            assert task.pro_forma_abstract
            assert task.examples
            assert task.encoding_rules
            assert task.encoding_description
            assert task.recommended_visualizations

    def test_channels_in_vocabulary(self):
        for task in builtin_tasks():
            for rule in task.encoding_rules:
                assert rule.channel in ENCODING_CHANNELS

    def test_correlation_wants_quantitative_axes(self):
        correlation = builtin_tasks()[0]
        rules = {r.channel: set(r.allowed_datatypes) for r in correlation.encoding_rules}
        assert Datatype.QUANTITATIVE in rules["X axis"]
        assert Datatype.QUANTITATIVE in rules["Y axis"]
        assert correlation.recommended_visualizations == ("point",)

    def test_trend_is_temporal_line(self):
        trend = next(t for t in builtin_tasks() if t.name is TaskName.TREND)
        x_rule = next(r for r in trend.encoding_rules if r.channel == "X axis")
        assert Datatype.TEMPORAL in x_rule.allowed_datatypes
        assert "line" in trend.recommended_visualizations

    def test_recommended_marks_within_validator_vocabulary(self):
        for task in builtin_tasks():
            for mark in task.recommended_visualizations:
                assert mark in MARK_VOCABULARY, f"{task.name.value} recommends {mark}"

    def test_repeated_calls_structurally_identical(self):
        assert builtin_tasks() == builtin_tasks()
        assert builtin_followups() == builtin_followups()


class TestBuiltinFollowups:
    def test_exactly_nine_permutations(self):
        followups = builtin_followups()
        assert len(followups) == 9
        pairs = {(f.action, f.target) for f in followups}
        assert len(pairs) == 9

    def test_every_pair_present(self):
        pairs = {(f.action.value, f.target.value) for f in builtin_followups()}
        expected = {
            (a, t)
            for a in ("Add", "Remove", "Replace")
            for t in ("Attribute", "Task", "VisualizationType")
        }
        assert pairs == expected

    def test_each_has_examples(self):
        for f in builtin_followups():
            assert len(f.examples) >= 1

    def test_add_task_example_reads_like_a_followup(self):
        add_task = next(
            f
            for f in builtin_followups()
            if f.action is FollowUpAction.ADD and f.target is FollowUpTarget.TASK
        )
        assert any("also" in e or "now" in e for e in add_task.examples)


class TestConstructorInvariants:
    def test_task_missing_examples_rejected(self):
        with pytest.raises(ValueError, match="examples"):
            TaskDefinition(
                name=TaskName.SORT,
                description="d",
                pro_forma_abstract="p",
                examples=(),
                encoding_rules=(EncodingRule("X axis", (Datatype.NOMINAL,)),),
                encoding_description="e",
                recommended_visualizations=("bar",),
            )

    def test_unknown_channel_rejected(self):
        with pytest.raises(ValueError, match="channel"):
            EncodingRule("Z axis", (Datatype.NOMINAL,))

    def test_followup_without_examples_rejected(self):
        with pytest.raises(ValueError):
            FollowUpOperation(
                action=FollowUpAction.ADD,
                target=FollowUpTarget.TASK,
                instructions="do it",
                examples=(),
            )


class TestSerialization:
    def test_matches_shipped_v5_file_bit_exact(self):
        serialized = serialize_taxonomy(builtin_tasks(), builtin_followups())
        assert serialized.encode("utf-8") == data_file("v5").read_bytes()

    def test_deterministic(self):
        a = serialize_taxonomy(builtin_tasks(), builtin_followups())
        b = serialize_taxonomy(builtin_tasks(), builtin_followups())
        assert a == b

    def test_idempotent_through_parse(self):
        serialized = serialize_taxonomy(builtin_tasks(), builtin_followups())
        reparsed = json.loads(serialized)
        assert json.dumps(reparsed, indent=2, ensure_ascii=False) + "\n" == serialized

    def test_orders_inputs_canonically(self):
        shuffled_tasks = list(reversed(builtin_tasks()))
        shuffled_fups = list(reversed(builtin_followups()))
        assert serialize_taxonomy(shuffled_tasks, shuffled_fups) == serialize_taxonomy(
            builtin_tasks(), builtin_followups()
        )

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            serialize_tasks([])
        with pytest.raises(ValueError):
            serialize_followups([])


class TestVersionLineage:
    """v1-v4 are documented fixtures of the prompt's history, not runtime modes."""

    def test_v1_four_tasks_minimal_properties(self):
        doc = json.loads(data_file("v1").read_text())
        names = [t["name"] for t in doc["analyticTasks"]]
        assert names == ["Correlation", "Distribution", "DerivedValue", "Trend"]
        assert all("examples" not in t for t in doc["analyticTasks"])
        assert all("recommendedVisualizations" not in t for t in doc["analyticTasks"])
        assert "followUpOperations" not in doc

    def test_v2_adds_examples_and_recommendations(self):
        doc = json.loads(data_file("v2").read_text())
        assert len(doc["analyticTasks"]) == 4
        assert all(t["examples"] for t in doc["analyticTasks"])
        assert all(t["recommendedVisualizations"] for t in doc["analyticTasks"])
        assert all("encodingDescription" not in t for t in doc["analyticTasks"])

    @pytest.mark.parametrize("version", ["v3", "v4"])
    def test_v3_v4_all_seven_tasks_full_properties(self, version):
        doc = json.loads(data_file(version).read_text())
        assert [t["name"] for t in doc["analyticTasks"]] == EXPECTED_TASK_NAMES
        assert all(t["encodingDescription"] for t in doc["analyticTasks"])
        assert "followUpOperations" not in doc

    def test_v5_adds_followups(self):
        doc = json.loads(data_file("v5").read_text())
        assert len(doc["followUpOperations"]) == 9

    def test_unknown_version_rejected(self):
        with pytest.raises(ValueError):
            data_file("v6")
