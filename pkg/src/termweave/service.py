"""HTTP API over a project: runs, topics, sheets, shares, comparisons.

Detection requests are queued onto a single background worker per
project (one writer), while read endpoints serve persisted artifacts
only; artifacts are immutable once published, so concurrent reads never
observe partial results.  Identical detection parameters return the
cached run instead of spawning a new job.
"""

from __future__ import annotations

import json
import queue
import threading
import uuid
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import analytics, pipeline
from .community import DetectParams
from .errors import DataError, MissingPrerequisiteError, TermWeaveError
from .store import Project


class RunRequest(BaseModel):
    gamma: float
    reduction: float | None = None
    n_rep: int | None = None
    n_con: int | None = None
    min_size_frac: float | None = None
    seed: int | None = None


class _JobWorker:
    """Single background compute worker; one detection at a time."""

    def __init__(self, project: Project):
        self.project = project
        self.jobs: dict[str, dict[str, Any]] = {}
        self.by_run: dict[str, str] = {}
        self._queue: queue.Queue[str | None] = queue.Queue()
        self._lock = threading.Lock()
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def submit(self, params: DetectParams, reduction: float) -> dict[str, Any]:
        run_key = pipeline.run_key_for(params, reduction)
        with self._lock:
            existing_job = self.by_run.get(run_key)
            if existing_job:
                job = self.jobs[existing_job]
                if job["status"] in ("queued", "running", "done"):
                    return job
            job_id = uuid.uuid4().hex[:12]
            job = {
                "job": job_id,
                "run": run_key,
                "status": "queued",
                "params": {**params.to_dict(), "reduction": reduction},
                "error": None,
            }
            self.jobs[job_id] = job
            self.by_run[run_key] = job_id
        self._queue.put(job_id)
        return job

    def job(self, job_id: str) -> dict[str, Any] | None:
        return self.jobs.get(job_id)

    def job_for_run(self, run_key: str) -> dict[str, Any] | None:
        job_id = self.by_run.get(run_key)
        return self.jobs.get(job_id) if job_id else None

    def _loop(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            job = self.jobs[job_id]
            job["status"] = "running"
            try:
                params_dict = dict(job["params"])
                reduction = params_dict.pop("reduction")
                params = DetectParams(
                    gamma=params_dict["gamma"],
                    n_rep=params_dict["n_rep"],
                    n_con=params_dict["n_con"],
                    min_size_fraction=params_dict["min_size_fraction"],
                    seed=params_dict["seed"],
                )
                result = pipeline.detect_stage(
                    self.project, params, reduction, build_graph=True
                )
                job["result"] = result
                job["status"] = "done"
            except Exception as exc:  # failures surface through job status
                job["status"] = "failed"
                job["error"] = str(exc)

    def stop(self) -> None:
        self._queue.put(None)


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


def create_app(project: Project, static_dir: str | Path | None = None) -> FastAPI:
    if not project.initialized():
        raise DataError(f"project not initialized: {project.root}")
    app = FastAPI(title="termweave", version="0.1.0")
    worker = _JobWorker(project)
    app.state.worker = worker
    app.state.project = project

    @app.exception_handler(MissingPrerequisiteError)
    async def _missing(request: Request, exc: MissingPrerequisiteError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(DataError)
    async def _data(request: Request, exc: DataError):
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(TermWeaveError)
    async def _any(request: Request, exc: TermWeaveError):
        return _error(500, "internal", str(exc))

    @app.get("/api/project")
    def get_project() -> dict[str, Any]:
        manifest = project.manifest()
        return {
            "root": str(project.root),
            "stages": manifest.get("stages", {}),
            "runs": len(manifest.get("runs", {})),
            "config": project.config(),
        }

    @app.post("/api/runs")
    def post_run(body: RunRequest) -> dict[str, Any]:
        if project.stage("graph") is None and body.reduction is None:
            raise MissingPrerequisiteError("no graph artifact; run the graph stage first")
        params = pipeline.detect_params_from_config(
            project,
            gamma=body.gamma,
            n_rep=body.n_rep,
            n_con=body.n_con,
            min_size_fraction=body.min_size_frac,
            seed=body.seed,
        )
        reduction = body.reduction
        if reduction is None:
            reduction = project.stage("graph")["reduction"]
        run_key = pipeline.run_key_for(params, reduction)
        existing = project.run(run_key)
        if existing is not None:
            return {"run": run_key, "status": "done", "cached": True, **existing}
        job = worker.submit(params, reduction)
        return {"run": run_key, "status": job["status"], "cached": False, "job": job["job"]}

    @app.get("/api/runs")
    def list_runs() -> list[dict[str, Any]]:
        out = []
        for run_key, record in sorted(project.runs().items()):
            out.append(
                {
                    "run": run_key,
                    "status": "done",
                    "params": record["params"],
                    "n_topics": record["n_topics"],
                    "coverage": record["coverage"],
                }
            )
        done = {entry["run"] for entry in out}
        for job in worker.jobs.values():
            if job["run"] not in done and job["status"] != "done":
                out.append(
                    {
                        "run": job["run"],
                        "status": job["status"],
                        "params": job["params"],
                        "error": job["error"],
                    }
                )
        return out

    @app.get("/api/runs/{run_key}")
    def get_run(run_key: str) -> dict[str, Any]:
        record = project.run(run_key)
        if record is not None:
            return {"run": run_key, "status": "done", **record}
        job = worker.job_for_run(run_key) or worker.job(run_key)
        if job is not None:
            return {
                "run": job["run"],
                "status": job["status"],
                "params": job["params"],
                "error": job["error"],
            }
        raise MissingPrerequisiteError(f"unknown run: {run_key}")

    @app.get("/api/runs/{run_key}/topics")
    def get_run_topics(run_key: str) -> dict[str, Any]:
        topics = pipeline.load_topics(project, run_key)
        return {
            "run": run_key,
            "n_topics": topics.n_topics,
            "coverage": topics.coverage,
            "topics": [
                {"id": i, "size": len(terms)} for i, terms in enumerate(topics.topics)
            ],
            "unassigned": len(topics.unassigned),
        }

    @app.get("/api/topics-terms")
    def get_topics_terms(run: str) -> dict[str, Any]:
        topics = pipeline.load_topics(project, run)
        _, vocabulary = pipeline.load_corpus_artifacts(project)
        return {
            "run": run,
            "topics": [
                {"id": i, "terms": [vocabulary.term(t) for t in terms]}
                for i, terms in enumerate(topics.topics)
            ],
            "unassigned": [vocabulary.term(t) for t in topics.unassigned],
        }

    @app.get("/api/topics/{run_key}/{topic_id}/sheet")
    def get_sheet(run_key: str, topic_id: int) -> Any:
        record = project.run(run_key)
        if record is None:
            raise MissingPrerequisiteError(f"unknown run: {run_key}")
        sheets = record.get("sheets")
        if not sheets:
            raise MissingPrerequisiteError(
                f"run {run_key} has no sheets; run the sheets stage"
            )
        if not 0 <= topic_id < len(sheets):
            raise MissingPrerequisiteError(f"run {run_key} has no topic {topic_id}")
        return json.loads(project.load_artifact(sheets[topic_id]).decode())

    @app.get("/api/topics/{run_key}/{topic_id}/coherence")
    def get_coherence(run_key: str, topic_id: int) -> Any:
        record = project.run(run_key)
        if record is None:
            raise MissingPrerequisiteError(f"unknown run: {run_key}")
        art = record.get("coherence")
        if not art:
            raise MissingPrerequisiteError(
                f"run {run_key} has no coherence report; run the sheets stage"
            )
        rows = json.loads(project.load_artifact(art).decode())
        for row in rows:
            if row["topic"] == topic_id:
                return row
        raise MissingPrerequisiteError(f"run {run_key} has no topic {topic_id}")

    @app.get("/api/documents/{doc_id}/shares")
    def get_shares(doc_id: str, run: str) -> dict[str, Any]:
        shares = pipeline.shares_for_run(project, run)
        if doc_id not in shares:
            raise MissingPrerequisiteError(f"unknown document: {doc_id}")
        s = shares[doc_id]
        return {
            "doc": doc_id,
            "run": run,
            "counts": s.counts.tolist(),
            "shares": s.shares.tolist() if s.shares is not None else None,
            "dominant": s.dominant,
        }

    @app.get("/api/runs/{run_a}/compare/{run_b}")
    def get_compare(run_a: str, run_b: str) -> Any:
        # pure read: computed from the persisted topic sets, nothing stored
        a = pipeline.load_topics(project, run_a)
        b = pipeline.load_topics(project, run_b)
        return json.loads(analytics.compare_topic_sets(a, b).to_json())

    @app.get("/api/eval/crosstable")
    def get_crosstable(run: str) -> dict[str, Any]:
        docs, _ = pipeline.load_corpus_artifacts(project)
        class_labels = {d.doc_id: d.class_label for d in docs if d.class_label}
        if not class_labels:
            raise DataError("corpus has no class labels")
        shares = pipeline.shares_for_run(project, run)
        dominants = {
            doc_id: s.dominant for doc_id, s in shares.items() if doc_id in class_labels
        }
        topics = pipeline.load_topics(project, run)
        table = analytics.crosstable(class_labels, dominants, topics.n_topics)
        stats = analytics.classification_stats(table)
        return {
            "run": run,
            "classes": table.classes,
            "topics": table.topic_labels,
            "counts": table.counts.tolist(),
            "unclassified": table.unclassified,
            "weighted_f1": stats.weighted_f1,
            "matching": stats.matching,
        }

    static = Path(static_dir) if static_dir else _default_static_dir()
    if static and static.is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")
    return app


def _default_static_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None
