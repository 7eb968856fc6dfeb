"""HTTP service: analyze jobs and draft edit sessions.

The paper's message broker is replaced by an in-process FIFO worker with
per-(repo, branch) mutual exclusion. Draft sessions hold uncommitted edit
tails in memory (TTL-bound); nothing is persisted outside the repository.
"""

from __future__ import annotations

import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .arch_model import changeset_to_obj
from .edit_log import (
    EditCommand,
    EditLog,
    MalformedCommandError,
    ReplayReport,
    UnknownCommandError,
    parse_log,
    record,
    revert,
)
from .errors import TransportError, UserError
from .diagram_gen import render_url
from .github_api import HttpGitHubApi
from .pipeline import (
    DEFAULT_PLANTUML_SERVER,
    PLANTUML_SERVER_ENV_VAR,
    build_bundle,
    run_on_snapshot,
    run_pipeline,
)
from .repo_io import (
    EDITS_PATH,
    RepoRef,
    RepoSnapshot,
    fetch_sources,
    resolve_repo_ref,
    write_artifacts,
)

BIND_ENV_VAR = "LIVING_ARCH_BIND"
SESSION_TTL_ENV_VAR = "LIVING_ARCH_SESSION_TTL_SECS"
DEFAULT_BIND = "127.0.0.1:8080"
DEFAULT_SESSION_TTL = 3600.0


def _env_plantuml_server() -> str:
    return os.environ.get(PLANTUML_SERVER_ENV_VAR, DEFAULT_PLANTUML_SERVER)


def _env_session_ttl() -> float:
    return float(os.environ.get(SESSION_TTL_ENV_VAR, str(DEFAULT_SESSION_TTL)))


@dataclass
class ServiceConfig:
    plantuml_server: str = field(default_factory=_env_plantuml_server)
    session_ttl: float = field(default_factory=_env_session_ttl)
    github_api_factory: Callable[[], object] = HttpGitHubApi.from_env
    clock: Callable[[], float] = time.time
    editor_base: str | None = None
    editor_static: str | None = None  # directory holding the built editor UI


@dataclass
class AnalyzeJob:
    job_id: str
    repo: RepoRef
    update_readme: bool
    mode: str  # "direct" | "pull_request"
    log_override: EditLog | None = None
    status: str = "queued"  # queued -> running -> done | failed
    result: str | None = None
    error: str | None = None

    def to_obj(self) -> dict:
        return {
            "job_id": self.job_id,
            "status": self.status,
            "repo": {
                "provider": self.repo.provider,
                "location": self.repo.location,
                "branch": self.repo.branch,
            },
            "update_readme": self.update_readme,
            "result": self.result,
            "error": self.error,
        }


class JobQueue:
    """FIFO worker with at most one live (queued or running) job per branch."""

    def __init__(self, executor: Callable[[AnalyzeJob], str]):
        self._executor = executor
        self._jobs: dict[str, AnalyzeJob] = {}
        self._active: dict[tuple[str, str, str], str] = {}
        self._lock = threading.Lock()
        self._queue: queue.Queue[str] = queue.Queue()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(
        self,
        repo: RepoRef,
        update_readme: bool,
        mode: str,
        log_override: EditLog | None = None,
    ) -> tuple[AnalyzeJob, bool]:
        key = (repo.provider, repo.location, repo.branch)
        with self._lock:
            existing_id = self._active.get(key)
            if existing_id is not None:
                return self._jobs[existing_id], False
            job = AnalyzeJob(
                job_id=uuid.uuid4().hex,
                repo=repo,
                update_readme=update_readme,
                mode=mode,
                log_override=log_override,
            )
            self._jobs[job.job_id] = job
            self._active[key] = job.job_id
            self._queue.put(job.job_id)
            return job, True

    def get(self, job_id: str) -> AnalyzeJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def wait_idle(self, timeout: float = 30.0) -> None:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if not self._active:
                    return
            time.sleep(0.01)
        raise TimeoutError("job queue did not drain")

    def _run(self) -> None:
        while True:
            job_id = self._queue.get()
            job = self._jobs[job_id]
            job.status = "running"
            try:
                job.result = self._executor(job)
                job.status = "done"
            except Exception as exc:  # jobs must never kill the worker
                job.error = str(exc)
                job.status = "failed"
            finally:
                key = (job.repo.provider, job.repo.location, job.repo.branch)
                with self._lock:
                    self._active.pop(key, None)
                self._queue.task_done()


@dataclass
class DraftSession:
    session_id: str
    repo: RepoRef
    snapshot: RepoSnapshot
    base_head: str
    log: EditLog
    committed_len: int
    expires_at: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionExpiredError(Exception):
    pass


class SessionStore:
    def __init__(self, ttl: float, clock: Callable[[], float]):
        self._ttl = ttl
        self._clock = clock
        self._sessions: dict[str, DraftSession] = {}
        self._lock = threading.Lock()

    def create(self, repo: RepoRef, snapshot: RepoSnapshot, log: EditLog) -> DraftSession:
        session = DraftSession(
            session_id=uuid.uuid4().hex,
            repo=repo,
            snapshot=snapshot,
            base_head=snapshot.head,
            log=log,
            committed_len=len(log.commands),
            expires_at=self._clock() + self._ttl,
        )
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> DraftSession:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise KeyError(session_id)
            if self._clock() > session.expires_at:
                del self._sessions[session_id]
                raise SessionExpiredError(session_id)
            return session


class AnalyzeRequest(BaseModel):
    repo: str
    branch: str = "main"
    provider: str = "auto"
    update_readme: bool = False


class SessionRequest(BaseModel):
    repo: str
    branch: str = "main"
    provider: str = "auto"


class CommandRequest(BaseModel):
    kind: str
    payload: dict
    highlight: bool = False


class SubmitRequest(BaseModel):
    update_readme: bool = False


def _report_obj(report: ReplayReport) -> list[dict]:
    out = []
    for entry in report.entries:
        obj = {"command_id": entry.command_id, "status": entry.status}
        if entry.reason is not None:
            obj["reason"] = entry.reason
        out.append(obj)
    return out


def _iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="living-arch", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def github_api(repo: RepoRef):
        return config.github_api_factory() if repo.provider == "github" else None

    def editor_url(repo: RepoRef) -> str | None:
        if config.editor_base is None:
            return None
        return (
            f"{config.editor_base.rstrip('/')}/editor"
            f"?provider={repo.provider}&repo={repo.location}&branch={repo.branch}"
        )

    def execute(job: AnalyzeJob) -> str:
        api = github_api(job.repo)
        result = run_pipeline(job.repo, api=api, log_override=job.log_override)
        bundle = build_bundle(result, update_readme=job.update_readme)
        outcome = write_artifacts(
            job.repo, bundle, job.mode, api=api, editor_url=editor_url(job.repo)
        )
        return outcome.reference

    jobs = JobQueue(execute)
    sessions = SessionStore(config.session_ttl, config.clock)
    app.state.jobs = jobs
    app.state.sessions = sessions
    app.state.config = config

    def resolve(repo: str, branch: str, provider: str) -> RepoRef:
        try:
            return resolve_repo_ref(repo, branch, provider)
        except UserError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    def preview_payload(session: DraftSession, highlight: bool = False) -> dict:
        result = run_on_snapshot(
            session.snapshot, log_override=session.log, highlight=highlight
        )
        return {
            "session_id": session.session_id,
            "base_head": session.base_head,
            "expires_at": _iso(session.expires_at),
            "highlight": highlight,
            "puml": result.document.puml_text,
            "preview_url": render_url(
                result.document, config.plantuml_server, "svg", "deflate"
            ),
            "source_map": [
                {"line": line, "ref": ref} for line, ref in result.document.source_map
            ],
            "changeset": changeset_to_obj(result.changeset),
            "report": _report_obj(result.report),
            "commands": [
                {
                    "command_id": cmd.command_id,
                    "issued_at": cmd.issued_at,
                    "kind": cmd.kind,
                    "payload": cmd.payload,
                    "committed": index < session.committed_len,
                }
                for index, cmd in enumerate(session.log.commands)
            ],
        }

    def load_session(session_id: str) -> DraftSession:
        try:
            return sessions.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        except SessionExpiredError:
            raise HTTPException(status_code=410, detail=f"session {session_id} expired")

    @app.post("/api/analyze", status_code=202)
    def post_analyze(request: AnalyzeRequest):
        repo = resolve(request.repo, request.branch, request.provider)
        mode = "pull_request" if repo.provider == "github" else "direct"
        job, created = jobs.submit(repo, request.update_readme, mode)
        if not created:
            raise HTTPException(
                status_code=409,
                detail={"job_id": job.job_id, "message": "analysis already in flight"},
            )
        return {"job_id": job.job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job.to_obj()

    @app.post("/api/sessions", status_code=201)
    def post_session(request: SessionRequest):
        repo = resolve(request.repo, request.branch, request.provider)
        try:
            snapshot = fetch_sources(repo, api=github_api(repo))
            log = (
                parse_log(snapshot.files[EDITS_PATH])
                if EDITS_PATH in snapshot.files
                else EditLog()
            )
            session = sessions.create(repo, snapshot, log)
            return preview_payload(session)
        except TransportError as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        except UserError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/api/sessions/{session_id}/preview")
    def get_preview(session_id: str, highlight: bool = False):
        session = load_session(session_id)
        with session.lock:
            return preview_payload(session, highlight)

    @app.post("/api/sessions/{session_id}/commands")
    def post_command(session_id: str, request: CommandRequest):
        session = load_session(session_id)
        with session.lock:
            try:
                session.log = record(
                    session.log, EditCommand(kind=request.kind, payload=request.payload)
                )
            except MalformedCommandError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            return preview_payload(session, request.highlight)

    @app.delete("/api/sessions/{session_id}/commands/{command_id}")
    def delete_command(session_id: str, command_id: str, highlight: bool = False):
        session = load_session(session_id)
        with session.lock:
            try:
                new_log = revert(session.log, command_id)
            except UnknownCommandError as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            removed_committed = any(
                c.command_id == command_id
                for c in session.log.commands[: session.committed_len]
            )
            session.log = new_log
            if removed_committed:
                session.committed_len -= 1
            return preview_payload(session, highlight)

    @app.post("/api/sessions/{session_id}/submit", status_code=202)
    def post_submit(session_id: str, request: SubmitRequest):
        session = load_session(session_id)
        with session.lock:
            mode = "pull_request" if session.repo.provider == "github" else "direct"
            job, created = jobs.submit(
                session.repo, request.update_readme, mode, log_override=session.log
            )
            if not created:
                raise HTTPException(
                    status_code=409,
                    detail={"job_id": job.job_id, "message": "analysis already in flight"},
                )
            return {"job_id": job.job_id}

    if config.editor_static:
        from fastapi.staticfiles import StaticFiles

        app.mount("/editor", StaticFiles(directory=config.editor_static, html=True), name="editor")

    return app


def parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    return host or "127.0.0.1", int(port)
