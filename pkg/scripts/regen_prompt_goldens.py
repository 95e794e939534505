#!/usr/bin/env python3
"""Regenerate the pinned golden prompt files.

Covers every (dataset, query type, json_only, mode) combination in
tests/fixtures/prompt_cases.json plus the canonical movies prompt. Re-run
only when the prompt layout intentionally changes, then hand-audit the
diff before committing.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from vizquery.dataset import ingest, subset  # noqa: E402
from vizquery.prompt import Mode, PromptConfig, assemble, render  # noqa: E402
from vizquery.response import spec_from_object  # noqa: E402

GOLDEN_DIR = REPO / "tests" / "fixtures" / "golden" / "prompts"


def golden_name(dataset_id: str, query_type: str, mode: Mode, json_only: bool) -> str:
    mode_tag = "initial" if mode is Mode.INITIAL else "followup"
    prose_tag = "json" if json_only else "prose"
    return f"{dataset_id}.{query_type}.{mode_tag}.{prose_tag}.prompt.txt"


def main() -> None:
    grid = json.loads((REPO / "tests" / "fixtures" / "prompt_cases.json").read_text())
    seed = grid["seed"]
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)

    for dataset_id, paths in grid["datasets"].items():
        dataset = ingest(REPO / paths["path"], "csv", source_label=paths["path"])
        sub = subset(dataset, seed)
        previous = spec_from_object(json.loads((REPO / paths["prev"]).read_text()))
        for query_type, query in grid["queries"][dataset_id].items():
            for mode in (Mode.INITIAL, Mode.FOLLOW_UP):
                for json_only in (True, False):
                    config = PromptConfig(mode=mode, json_only=json_only, seed=seed)
                    prev = previous if mode is Mode.FOLLOW_UP else None
                    text = render(assemble(sub, [query], config, prev))
                    target = GOLDEN_DIR / golden_name(dataset_id, query_type, mode, json_only)
                    target.write_text(text, encoding="utf-8")

    # The canonical movies prompt: fully specified, initial, JSON-only, seed 42.
    canonical = GOLDEN_DIR / golden_name("movies", "fully_specified", Mode.INITIAL, True)
    (GOLDEN_DIR / "movies.v5.prompt.txt").write_text(
        canonical.read_text(encoding="utf-8"), encoding="utf-8"
    )
    count = len(list(GOLDEN_DIR.glob("*.prompt.txt")))
    print(f"wrote {count} golden prompts under {GOLDEN_DIR}")


if __name__ == "__main__":
    main()
