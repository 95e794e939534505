"""HTTP service for the companion UI and scripted clients.

A thin JSON layer over datasets, sessions, and the query pipeline. All
error bodies are ``{"code": ..., "message": ...}``; per-session query
handling is serialized with one lock per session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from threading import Lock

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .dataset import Dataset, IngestError, ingest
from .llm import provider_from_config
from .prompt import Mode
from .session import NoPriorSpecificationError, Session, SessionStore, ask, create_session, session_to_dict, turn_to_dict
from .prompt import EmptyQueryError


@dataclass
class ServiceConfig:
    listen_address: str = "127.0.0.1:8750"
    state_dir: str = ".vizquery"
    default_seed: int = 42
    cors_allowed_origin: str | None = None
    provider: dict = dc_field(default_factory=dict)
    datasets: list[dict] = dc_field(default_factory=list)
    repair: bool = True
    token_budget: int = 8000

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            listen_address=obj.get("listen_address", "127.0.0.1:8750"),
            state_dir=obj.get("state_dir", ".vizquery"),
            default_seed=int(obj.get("default_seed", 42)),
            cors_allowed_origin=obj.get("cors_allowed_origin"),
            provider=obj.get("provider", {}),
            datasets=obj.get("datasets", []),
            repair=bool(obj.get("repair", True)),
            token_budget=int(obj.get("token_budget", 8000)),
        )


class CreateSessionBody(BaseModel):
    dataset_id: str
    seed: int | None = None


class QueryBody(BaseModel):
    query: str
    mode: str = "Initial"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _dataset_summary(dataset: Dataset) -> dict:
    return {
        "dataset_id": dataset.id,
        "row_count": dataset.row_count,
        "attributes": [
            {"name": a.name, "datatype": a.datatype.value} for a in dataset.attributes
        ],
    }


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="vizquery", version="0.1.0")
    if config.cors_allowed_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.cors_allowed_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    state_dir = Path(config.state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    store = SessionStore(state_dir / "sessions")
    provider = provider_from_config(config.provider) if config.provider else None

    datasets: dict[str, Dataset] = {}
    for entry in config.datasets:
        dataset = ingest(
            entry["path"],
            entry.get("format", "csv"),
            dataset_id=entry.get("id"),
            source_label=entry.get("source_label"),
        )
        datasets[dataset.id] = dataset

    sessions: dict[str, Session] = {}
    session_locks: dict[str, Lock] = {}
    registry_lock = Lock()

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(_request: Request, exc: RequestValidationError):
        return _error(422, "InvalidBody", str(exc.errors()[:1]))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/datasets")
    def list_datasets() -> list[dict]:
        return [_dataset_summary(d) for d in datasets.values()]

    @app.post("/datasets")
    async def upload_dataset(file: UploadFile):
        uploads = state_dir / "uploads"
        uploads.mkdir(parents=True, exist_ok=True)
        name = Path(file.filename or "upload.csv").name
        target = uploads / name
        target.write_bytes(await file.read())
        fmt = "json_records" if target.suffix.lower() == ".json" else "csv"
        try:
            dataset = ingest(target, fmt, source_label=name)
        except IngestError as exc:
            return _error(422, "IngestError", str(exc))
        with registry_lock:
            datasets[dataset.id] = dataset
        return _dataset_summary(dataset)

    @app.post("/sessions")
    def create_session_endpoint(body: CreateSessionBody):
        dataset = datasets.get(body.dataset_id)
        if dataset is None:
            return _error(404, "UnknownDataset", f"no dataset {body.dataset_id!r}")
        seed = body.seed if body.seed is not None else config.default_seed
        session = create_session(
            dataset,
            seed,
            provider,
            repair_enabled=config.repair,
            token_budget=config.token_budget,
        )
        with registry_lock:
            sessions[session.id] = session
            session_locks[session.id] = Lock()
        store.save(session)
        return {"session_id": session.id, "dataset_id": dataset.id, "seed": seed}

    @app.post("/sessions/{session_id}/query")
    def query_endpoint(session_id: str, body: QueryBody):
        session = sessions.get(session_id)
        if session is None:
            return _error(404, "UnknownSession", f"no session {session_id!r}")
        if provider is None:
            return _error(502, "NoProvider", "service is running without a provider")
        try:
            mode = Mode(body.mode)
        except ValueError:
            return _error(422, "InvalidBody", f"mode must be Initial or FollowUp, not {body.mode!r}")
        lock = session_locks[session_id]
        with lock:
            try:
                turn = ask(session, body.query, mode)
            except NoPriorSpecificationError as exc:
                return _error(409, "NoPriorSpecification", str(exc))
            except EmptyQueryError as exc:
                return _error(422, "EmptyQuery", str(exc))
            store.save(session)
        payload = turn_to_dict(turn)
        payload["turn_index"] = len(session.turns) - 1
        if turn.error is not None and turn.error.provider:
            return _error(502, turn.error.kind, turn.error.message)
        return payload

    @app.get("/sessions/{session_id}/history")
    def history_endpoint(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            return _error(404, "UnknownSession", f"no session {session_id!r}")
        return session_to_dict(session)

    return app
