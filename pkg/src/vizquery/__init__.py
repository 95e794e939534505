"""Natural-language-to-visualization pipeline.

Compiles a tabular dataset and a natural-language query into a single LLM
prompt, dispatches it, and parses and validates the returned analytic
specification (attributeMap, taskMap, visList of Vega-Lite charts), with
conversational follow-up sessions and a corpus evaluation harness.
"""

from .dataset import Attribute, DataSubset, Dataset, Datatype, ingest, render_subset, subset
from .llm import Completion, HttpProvider, MockProvider, ProviderConfig, mock_provider
from .prompt import AssembledPrompt, Mode, PromptConfig, assemble, estimate_tokens, render
from .response import (
    AnalyticSpecification,
    ValidationReport,
    Verdict,
    parse,
    repair,
    validate,
    validate_ambiguity_coverage,
)
from .session import Session, Turn, ask, create_session
from .taxonomy import builtin_followups, builtin_tasks, serialize_taxonomy

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "DataSubset",
    "Dataset",
    "Datatype",
    "ingest",
    "render_subset",
    "subset",
    "Completion",
    "HttpProvider",
    "MockProvider",
    "ProviderConfig",
    "mock_provider",
    "AssembledPrompt",
    "Mode",
    "PromptConfig",
    "assemble",
    "estimate_tokens",
    "render",
    "AnalyticSpecification",
    "ValidationReport",
    "Verdict",
    "parse",
    "repair",
    "validate",
    "validate_ambiguity_coverage",
    "Session",
    "Turn",
    "ask",
    "create_session",
    "builtin_followups",
    "builtin_tasks",
    "serialize_taxonomy",
]
