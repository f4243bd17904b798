"""Annotation server: serves pending tasks to annotators, records votes
to an append-only log before acknowledging them, and reports progress.

Durability contract: a vote is written, flushed, and fsynced to the log
before the HTTP response goes out, so killing the process never loses
an acknowledged vote. Restarting with the same tasks file and log
rebuilds identical state by replaying the log. All log writes go
through one lock, so concurrent votes serialize cleanly.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from flawfic.core import match_sentence, segment_sentences
from flawfic.dataset import (
    AnnotationTask,
    Resolution,
    Vote,
    VoteVerdict,
    import_annotation_tasks,
    resolve_annotations,
)

__all__ = ["AnnotationState", "create_app", "serve"]

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8321


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AnnotationState:
    """Tasks plus their votes, backed by an append-only JSONL vote log."""

    def __init__(self, tasks: list[AnnotationTask], log_path: str | Path):
        self._lock = threading.Lock()
        self._tasks: dict[str, AnnotationTask] = {}
        for task in tasks:
            if task.task_id in self._tasks:
                raise ValueError(f"duplicate task id {task.task_id!r}")
            self._tasks[task.task_id] = task
        self._order = [t.task_id for t in tasks]
        self._log_path = Path(log_path)
        self._replay_log()

    def _replay_log(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path, encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                entry = json.loads(line)
                task = self._tasks.get(entry["task_id"])
                if task is None:
                    continue  # log may cover a retired tasks file
                vote = Vote(
                    annotator_id=entry["annotator"],
                    verdict=VoteVerdict(entry["verdict"]),
                    timestamp=entry.get("ts", ""),
                )
                if any(v.annotator_id == vote.annotator_id for v in task.votes):
                    continue  # first vote wins; duplicates can't reach the log
                self._tasks[task.task_id] = task.with_vote(vote)

    def _append_log(self, task_id: str, annotator: str, verdict: str, ts: str) -> None:
        line = json.dumps(
            {"task_id": task_id, "annotator": annotator, "verdict": verdict, "ts": ts},
            ensure_ascii=False,
            sort_keys=True,
        )
        self._log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._log_path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()
            os.fsync(f.fileno())

    # -- queries ------------------------------------------------------

    def resolution(self, task: AnnotationTask) -> Resolution:
        return resolve_annotations(task)

    def next_task(self, annotator: str) -> Optional[AnnotationTask]:
        """First pending task this annotator hasn't voted on, in file order."""
        with self._lock:
            for task_id in self._order:
                task = self._tasks[task_id]
                if any(v.annotator_id == annotator for v in task.votes):
                    continue
                if self.resolution(task) is Resolution.PENDING:
                    return task
            return None

    def progress(self) -> dict:
        with self._lock:
            counts = {r.value: 0 for r in Resolution}
            votes = {v.value: 0 for v in VoteVerdict}
            total = 0
            for task in self._tasks.values():
                counts[self.resolution(task).value] += 1
                for vote in task.votes:
                    votes[vote.verdict.value] += 1
                    total += 1
            return {
                "pending": counts[Resolution.PENDING.value],
                "accepted": counts[Resolution.ACCEPTED.value],
                "rejected": counts[Resolution.REJECTED.value],
                "votes": {**votes, "total": total},
            }

    def tasks(self) -> list[AnnotationTask]:
        with self._lock:
            return [self._tasks[task_id] for task_id in self._order]

    # -- the one mutation ----------------------------------------------

    def vote(self, task_id: str, annotator: str, verdict: str) -> AnnotationTask:
        """Record a vote; persisted to the log before this returns.

        Raises KeyError (unknown task), ValueError (bad verdict), or
        PermissionError (annotator already voted on this task).
        """
        parsed = VoteVerdict(verdict)  # ValueError on junk
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise KeyError(task_id)
            if any(v.annotator_id == annotator for v in task.votes):
                raise PermissionError(
                    f"annotator {annotator!r} already voted on {task_id!r}"
                )
            ts = _now()
            self._append_log(task_id, annotator, parsed.value, ts)
            updated = task.with_vote(
                Vote(annotator_id=annotator, verdict=parsed, timestamp=ts)
            )
            self._tasks[task_id] = updated
            return updated


def _task_payload(task: AnnotationTask) -> dict:
    """What an annotator needs: the story, sentence segmentation done
    server-side, and which sentence indices to highlight."""
    sentences = segment_sentences(task.story_text)
    error_indices = [
        s.index for s in sentences if match_sentence(s.text, task.error_lines)
    ]
    contradicted_indices = [
        s.index
        for s in sentences
        if match_sentence(s.text, task.contradicted_lines)
    ]
    return {
        "task_id": task.task_id,
        "story": task.story_text,
        "sentences": [s.text for s in sentences],
        "error_indices": error_indices,
        "contradicted_indices": contradicted_indices,
        "explanation": task.explanation,
        "votes_so_far": len(task.votes),
    }


def default_static_dir() -> Path:
    return Path(__file__).parent / "static"


def create_app(
    tasks_path: str | Path,
    log_path: str | Path,
    token: Optional[str] = None,
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    state = AnnotationState(import_annotation_tasks(tasks_path), log_path)
    app = FastAPI(title="flawfic annotation", docs_url=None, redoc_url=None)
    app.state.annotation = state

    def authorized(request: Request) -> bool:
        return token is None or request.query_params.get("token") == token

    @app.get("/api/tasks/next")
    def api_next(request: Request, annotator: str = ""):
        if not authorized(request):
            return JSONResponse({"error": "bad or missing token"}, status_code=401)
        if not annotator:
            return JSONResponse(
                {"error": "annotator query parameter is required"}, status_code=400
            )
        task = state.next_task(annotator)
        if task is None:
            return {"task": None}
        return {"task": _task_payload(task)}

    @app.post("/api/tasks/{task_id}/vote")
    async def api_vote(task_id: str, request: Request):
        if not authorized(request):
            return JSONResponse({"error": "bad or missing token"}, status_code=401)
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be a JSON object"}, status_code=400)
        annotator = body.get("annotator")
        verdict = body.get("verdict")
        if not isinstance(annotator, str) or not annotator:
            return JSONResponse({"error": "annotator is required"}, status_code=400)
        if not isinstance(verdict, str):
            return JSONResponse({"error": "verdict is required"}, status_code=400)
        try:
            updated = state.vote(task_id, annotator, verdict)
        except ValueError:
            allowed = ", ".join(v.value for v in VoteVerdict)
            return JSONResponse(
                {"error": f"verdict must be one of: {allowed}"}, status_code=400
            )
        except KeyError:
            return JSONResponse({"error": f"no task {task_id!r}"}, status_code=404)
        except PermissionError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        return {
            "ok": True,
            "task_id": task_id,
            "votes": len(updated.votes),
            "resolution": state.resolution(updated).value,
        }

    @app.get("/api/progress")
    def api_progress(request: Request):
        if not authorized(request):
            return JSONResponse({"error": "bad or missing token"}, status_code=401)
        return state.progress()

    static = Path(static_dir) if static_dir is not None else default_static_dir()
    if static.is_dir():
        index = static / "index.html"
        if index.is_file():

            @app.get("/", include_in_schema=False)
            def root():
                return FileResponse(index)

        app.mount("/", StaticFiles(directory=static), name="static")

    return app


def serve(
    tasks_path: str | Path,
    log_path: str | Path,
    host: str = DEFAULT_HOST,
    port: int = DEFAULT_PORT,
    token: Optional[str] = None,
    static_dir: Optional[str | Path] = None,
) -> None:
    import uvicorn

    app = create_app(tasks_path, log_path, token=token, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
