"""Prompt assembly: determinism, verbatim anchors, budgets, section order."""

from __future__ import annotations

import math
import random

import pytest

from conftest import GOLDEN_PROMPTS, ingest_fixture, load_prev_spec
from vizquery.dataset import subset
from vizquery.prompt import (
    FOLLOWUP_KEY_INSTRUCTION,
    INITIAL_KEY_INSTRUCTION,
    JSON_ONLY_SENTENCE,
    EmptyQueryError,
    MissingPreviousSpecError,
    Mode,
    PromptConfig,
    SECTION_ORDER,
    SectionId,
    TokenBudgetExceededError,
    assemble,
    estimate_tokens,
    render,
)

ANCHOR_INITIAL = (
    "classify the below natural language queries into the respective analytic tasks they map to"
)
ANCHOR_FOLLOWUP = (
    "Utilize the previous analytic specification (including the attributeMap, taskMap, and visList)"
)
ANCHOR_UNDERSPECIFIED_INFER = "infer the task that is best suited with the detected attributes' datatypes"
ANCHOR_UNDERSPECIFIED_GENERATE = (
    "generate a visualization specification using this inferred task and detected attributes"
)
ANCHOR_AMBIGUOUS = "with partial references to multiple data attributes"
ANCHOR_PROSE_SUPPRESSION = (
    "Do not include any additional prose in your response. I only want to see the JSON."
)
ANCHOR_SCHEMA_INTRO = "Here is the JSON object that the response should be returned as"


@pytest.fixture(scope="module")
def movies_subset():
    return subset(ingest_fixture("movies"), 42)


class TestEstimateTokens:
    def test_empty(self):
        assert estimate_tokens("") == 0

    def test_eight_bytes(self):
        assert estimate_tokens("abcdefgh") == 2

    def test_counts_bytes_not_chars(self):
        assert estimate_tokens("é" * 4) == 2  # 8 utf-8 bytes

    def test_monotone(self):
        previous = 0
        for n in range(64):
            current = estimate_tokens("a" * n)
            assert current >= previous
            previous = current

    def test_subadditive_exhaustive_small(self):
        # Exhaustive over all byte-length pairs up to 16: concatenation can
        # cost at most one token over the parts.
        for a in range(17):
            for b in range(17):
                lhs = estimate_tokens("x" * (a + b))
                rhs = estimate_tokens("x" * a) + estimate_tokens("x" * b)
                assert lhs <= rhs + 1
                assert lhs == math.ceil((a + b) / 4)


class TestAssemble:
    def test_initial_contains_key_instruction(self, movies_subset):
        prompt = assemble(movies_subset, ["Show gross by genre"], PromptConfig(seed=42))
        text = render(prompt)
        assert ANCHOR_INITIAL in text
        assert INITIAL_KEY_INSTRUCTION in text

    def test_json_only_sentence_present_iff_enabled(self, movies_subset):
        on = render(assemble(movies_subset, ["q1"], PromptConfig(json_only=True, seed=42)))
        off = render(assemble(movies_subset, ["q1"], PromptConfig(json_only=False, seed=42)))
        assert ANCHOR_PROSE_SUPPRESSION in on
        assert ANCHOR_PROSE_SUPPRESSION not in off
        assert JSON_ONLY_SENTENCE == ANCHOR_PROSE_SUPPRESSION

    def test_query_type_blocks_always_present(self, movies_subset):
        text = render(assemble(movies_subset, ["q"], PromptConfig(seed=42)))
        assert ANCHOR_UNDERSPECIFIED_INFER in text
        assert ANCHOR_UNDERSPECIFIED_GENERATE in text
        assert ANCHOR_AMBIGUOUS in text
        assert ANCHOR_SCHEMA_INTRO in text

    def test_followup_key_instruction_and_previous_section(self, movies_subset):
        previous = load_prev_spec("movies")
        prompt = assemble(
            movies_subset,
            ["Remove the color encoding"],
            PromptConfig(mode=Mode.FOLLOW_UP, seed=42),
            previous,
        )
        text = render(prompt)
        assert ANCHOR_FOLLOWUP in text
        assert FOLLOWUP_KEY_INSTRUCTION in text
        assert prompt.section(SectionId.PREVIOUS_SPECIFICATION) is not None
        assert '"Worldwide Gross"' in prompt.section(SectionId.PREVIOUS_SPECIFICATION)

    def test_initial_has_no_previous_section(self, movies_subset):
        prompt = assemble(movies_subset, ["q"], PromptConfig(seed=42))
        assert prompt.section(SectionId.PREVIOUS_SPECIFICATION) is None

    def test_followup_without_previous_rejected(self, movies_subset):
        with pytest.raises(MissingPreviousSpecError):
            assemble(movies_subset, ["q"], PromptConfig(mode=Mode.FOLLOW_UP, seed=42))

    @pytest.mark.parametrize("queries", [[], [""], ["  "], ["ok", ""]])
    def test_blank_queries_rejected(self, movies_subset, queries):
        with pytest.raises(EmptyQueryError):
            assemble(movies_subset, queries, PromptConfig(seed=42))

    def test_token_budget_enforced(self, movies_subset):
        with pytest.raises(TokenBudgetExceededError) as excinfo:
            assemble(movies_subset, ["q"], PromptConfig(token_budget=100, seed=42))
        assert excinfo.value.estimated > 100

    def test_estimated_tokens_within_budget(self, movies_subset):
        prompt = assemble(movies_subset, ["q"], PromptConfig(seed=42))
        assert 0 < prompt.estimated_tokens <= prompt.config_snapshot.token_budget
        assert prompt.estimated_tokens == estimate_tokens(render(prompt))

    def test_multiple_queries_numbered(self, movies_subset):
        prompt = assemble(movies_subset, ["first", "second"], PromptConfig(seed=42))
        body = prompt.section(SectionId.QUERIES)
        assert body == "1. first\n2. second"

    def test_deterministic(self, movies_subset):
        config = PromptConfig(seed=42)
        a = render(assemble(movies_subset, ["Show gross by genre"], config))
        b = render(assemble(movies_subset, ["Show gross by genre"], config))
        assert a == b

    def test_section_order_invariant(self, movies_subset):
        rng = random.Random(7)
        previous = load_prev_spec("movies")
        for _ in range(25):
            mode = rng.choice([Mode.INITIAL, Mode.FOLLOW_UP])
            config = PromptConfig(
                mode=mode,
                json_only=rng.choice([True, False]),
                token_budget=rng.randint(6000, 12000),
                seed=rng.randint(0, 10_000),
            )
            prompt = assemble(
                movies_subset,
                ["q"],
                config,
                previous if mode is Mode.FOLLOW_UP else None,
            )
            ids = [sid for sid, _ in prompt.sections]
            assert ids == [s for s in SECTION_ORDER if s in ids]
            assert (SectionId.PREVIOUS_SPECIFICATION in ids) == (mode is Mode.FOLLOW_UP)

    def test_only_v5_is_a_runtime_mode(self):
        with pytest.raises(ValueError):
            PromptConfig(taxonomy_version="v4")


class TestRender:
    def test_single_section_base_case(self, movies_subset):
        prompt = assemble(movies_subset, ["q"], PromptConfig(seed=42))
        first_id, first_body = prompt.sections[0]
        text = render(prompt)
        assert text.startswith("## Analytic Task Knowledge\n\n" + first_body)

    def test_sections_joined_by_blank_line(self, movies_subset):
        text = render(assemble(movies_subset, ["q"], PromptConfig(seed=42)))
        for header in ("## Instructions", "## Response Format", "## Data", "## Queries"):
            assert f"\n\n{header}\n\n" in text

    def test_matches_canonical_movies_golden(self, movies_subset, prompt_grid):
        query = prompt_grid["queries"]["movies"]["fully_specified"]
        text = render(assemble(movies_subset, [query], PromptConfig(seed=42)))
        golden = (GOLDEN_PROMPTS / "movies.v5.prompt.txt").read_text(encoding="utf-8")
        assert text == golden
