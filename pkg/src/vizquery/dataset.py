"""Tabular ingestion, attribute datatype inference, and prompt row subsetting.

A Dataset is an immutable in-memory table with typed attributes. The prompt
never embeds the full table; it embeds a DataSubset: every header plus a
seeded random sample of at most ten rows, rendered as CSV lines.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from io import StringIO
from pathlib import Path

SAMPLE_ROW_LIMIT = 10
DISTINCT_SAMPLE_LIMIT = 5

NUMERIC_VOTE_THRESHOLD = 0.95
TEMPORAL_VOTE_THRESHOLD = 0.95

OVERRIDE_SUFFIX = ".types.json"

_YEAR_RE = re.compile(r"^\d{4}$")
_US_DATE_FORMAT = "%m/%d/%Y"


class Datatype(str, Enum):
    QUANTITATIVE = "Quantitative"
    NOMINAL = "Nominal"
    ORDINAL = "Ordinal"
    TEMPORAL = "Temporal"


class IngestError(ValueError):
    """Raised when a source cannot be turned into a Dataset."""


class DuplicateHeaderError(IngestError):
    """Raised when two columns share the same header text."""


@dataclass(frozen=True)
class Attribute:
    name: str
    datatype: Datatype
    distinct_sample: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise IngestError("attribute name must be non-empty")


@dataclass(frozen=True)
class Dataset:
    id: str
    source: str
    attributes: tuple[Attribute, ...]
    rows: tuple[dict[str, str], ...]

    def __post_init__(self) -> None:
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DuplicateHeaderError(f"duplicate header names in {self.id!r}")

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def attribute(self, name: str) -> Attribute | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class DataSubset:
    """Prompt-embeddable surrogate for a Dataset.

    Carries the source locator so the assembled prompt can point the LLM at
    the data url its Vega-Lite specs should read from.
    """

    dataset_id: str
    source: str
    headers: tuple[str, ...]
    sample_rows: tuple[dict[str, str], ...]
    seed: int


def _is_number(value: str) -> bool:
    try:
        return math.isfinite(float(value))
    except ValueError:
        return False


def _is_date(value: str) -> bool:
    """ISO-8601 (extended form), MM/DD/YYYY, or a bare 4-digit year."""
    if _YEAR_RE.match(value):
        return True
    # Compact ISO forms like 20200102 are indistinguishable from plain
    # integers; only the separator-bearing extended form counts.
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
        return True
    except ValueError:
        pass
    try:
        datetime.strptime(value, _US_DATE_FORMAT)
        return True
    except ValueError:
        return False


def infer_datatype(values: list[str]) -> Datatype:
    """Majority-vote datatype over a column's values.

    Empty cells do not vote. Temporal outranks Quantitative so that year
    columns (which also parse as numbers) classify as Temporal. Ordinal is
    never inferred; it can only come from an override file.
    """
    voters = [v.strip() for v in values if v.strip()]
    if not voters:
        return Datatype.NOMINAL
    temporal = sum(1 for v in voters if _is_date(v))
    if temporal / len(voters) >= TEMPORAL_VOTE_THRESHOLD:
        return Datatype.TEMPORAL
    numeric = sum(1 for v in voters if _is_number(v))
    if numeric / len(voters) >= NUMERIC_VOTE_THRESHOLD:
        return Datatype.QUANTITATIVE
    return Datatype.NOMINAL


def _distinct_sample(values: list[str]) -> tuple[str, ...]:
    seen: list[str] = []
    for v in values:
        if v and v not in seen:
            seen.append(v)
        if len(seen) == DISTINCT_SAMPLE_LIMIT:
            break
    return tuple(seen)


def _stringify(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        table = [row for row in reader]
    if not table:
        raise IngestError(f"empty file: {path}")
    headers, data = table[0], table[1:]
    # Pad/truncate ragged rows to the header width; missing cells are empty.
    width = len(headers)
    rows = [(row + [""] * width)[:width] for row in data]
    return headers, rows


def _read_json_records(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(records, list):
        raise IngestError(f"expected a JSON array of objects in {path}")
    if not records:
        raise IngestError(f"empty file: {path}")
    headers: list[str] = []
    for rec in records:
        if not isinstance(rec, dict):
            raise IngestError(f"expected objects in the JSON array in {path}")
        for key in rec:
            if key not in headers:
                headers.append(key)
    rows = [[_stringify(rec.get(h)) for h in headers] for rec in records]
    return headers, rows


def _load_overrides(source_path: Path) -> dict[str, Datatype]:
    sidecar = source_path.with_name(source_path.name + OVERRIDE_SUFFIX)
    if not sidecar.exists():
        return {}
    try:
        mapping = json.loads(sidecar.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid override file {sidecar}: {exc}") from exc
    overrides: dict[str, Datatype] = {}
    for name, datatype in mapping.items():
        try:
            overrides[name] = Datatype(datatype)
        except ValueError:
            raise IngestError(
                f"unknown datatype {datatype!r} for {name!r} in {sidecar}"
            ) from None
    return overrides


def ingest(
    source: str | Path,
    format: str = "csv",
    *,
    dataset_id: str | None = None,
    source_label: str | None = None,
) -> Dataset:
    """Read a CSV or JSON-records file into a typed Dataset.

    ``source_label`` overrides the locator recorded on the Dataset (and hence
    embedded in prompts); by default the source path is recorded as given.
    A sidecar ``<file>.types.json`` mapping attribute name to datatype, if
    present, overrides inference (the only way to obtain Ordinal).
    """
    path = Path(source)
    if not path.exists():
        raise IngestError(f"unreadable source: {source}")
    if format == "csv":
        headers, rows = _read_csv(path)
    elif format == "json_records":
        headers, rows = _read_json_records(path)
    else:
        raise IngestError(f"unknown format: {format!r}")

    if not headers or all(h.strip() == "" for h in headers):
        raise IngestError(f"zero columns in {source}")
    if any(h.strip() == "" for h in headers):
        raise IngestError(f"blank header name in {source}")
    if len(set(headers)) != len(headers):
        raise DuplicateHeaderError(f"duplicate header names in {source}")

    overrides = _load_overrides(path)
    unknown = set(overrides) - set(headers)
    if unknown:
        raise IngestError(f"override names not in dataset: {sorted(unknown)}")

    attributes = []
    for i, name in enumerate(headers):
        column = [row[i] for row in rows]
        datatype = overrides.get(name) or infer_datatype(column)
        attributes.append(
            Attribute(name=name, datatype=datatype, distinct_sample=_distinct_sample(column))
        )

    return Dataset(
        id=dataset_id or path.stem,
        source=source_label or str(source),
        attributes=tuple(attributes),
        rows=tuple({h: row[i] for i, h in enumerate(headers)} for row in rows),
    )


_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (output, next state)."""
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


def sample_indices(row_count: int, sample_size: int, seed: int) -> list[int]:
    """Seeded partial Fisher-Yates: pick ``sample_size`` distinct indices.

    Draws come from SplitMix64 so the sequence is identical on every
    platform and Python version. Selected indices are returned in ascending
    original order.
    """
    k = min(sample_size, row_count)
    indices = list(range(row_count))
    state = seed & _MASK64
    for i in range(k):
        value, state = _splitmix64(state)
        j = i + value % (row_count - i)
        indices[i], indices[j] = indices[j], indices[i]
    return sorted(indices[:k])


def subset(dataset: Dataset, seed: int) -> DataSubset:
    """All headers plus min(10, row_count) seeded sample rows."""
    if not dataset.attributes:
        raise ValueError("dataset has no attributes")
    chosen = sample_indices(dataset.row_count, SAMPLE_ROW_LIMIT, seed)
    return DataSubset(
        dataset_id=dataset.id,
        source=dataset.source,
        headers=tuple(dataset.attribute_names),
        sample_rows=tuple(dict(dataset.rows[i]) for i in chosen),
        seed=seed,
    )


def render_subset(sub: DataSubset) -> str:
    """CSV-style text: header line, then one line per sample row.

    RFC-4180 minimal quoting, so parsing the block back as CSV reproduces
    headers and rows exactly.
    """
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sub.headers)
    for row in sub.sample_rows:
        writer.writerow([row.get(h, "") for h in sub.headers])
    return buf.getvalue().rstrip("\n")
