"""HTTP service: dataset sessions, asynchronous analysis jobs, and the
descriptive endpoints.

Sessions and jobs live in memory behind one lock; a single daemon worker
drains the job queue so heavy fits never run on the request path. When a
data directory is configured (argument or EFFECTBENCH_DATA_DIR), uploaded
dataset bytes and finished results are written beneath it and reloaded on
startup, so a restart keeps ids valid.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import unquote

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .diagnostics import eda_variable, overview, table1, table1_tsv
from .diagnostics import correlation_matrix as corr_matrix
from .errors import ConfigError, DataError, EffectBenchError, ParseError
from .jsonutil import sanitize
from .pipeline import preflight, run_analysis
from .tabular import AnalysisConfig, RawTable, derive_survival, parse_csv

DATA_DIR_ENV = "EFFECTBENCH_DATA_DIR"


@dataclass
class Session:
    dataset_id: str
    raw: RawTable
    data: bytes


@dataclass
class AnalysisJob:
    job_id: str
    dataset_id: str
    config: dict
    seed: int
    status: str = "pending"
    stage: str | None = None
    error_detail: str | None = None
    result_bytes: bytes | None = None

    def status_payload(self) -> dict:
        out = {"status": self.status}
        if self.status in ("pending", "running"):
            out["stage"] = self.stage
        if self.status == "failed":
            out["error_detail"] = self.error_detail
        return out


class Registry:
    """All mutable service state, access-serialized."""

    def __init__(self, data_dir: str | None):
        self.lock = threading.Lock()
        self.sessions: dict = {}
        self.jobs: dict = {}
        self.queue: queue.Queue = queue.Queue()
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            (self.data_dir / "datasets").mkdir(parents=True, exist_ok=True)
            (self.data_dir / "results").mkdir(parents=True, exist_ok=True)
            self._reload()

    def _reload(self):
        for path in sorted((self.data_dir / "datasets").glob("*.csv")):
            try:
                table = parse_csv(path.read_bytes())
            except EffectBenchError:
                continue
            sid = path.stem
            self.sessions[sid] = Session(sid, table, path.read_bytes())
        for path in sorted((self.data_dir / "results").glob("*.json")):
            job_id = path.stem
            raw = path.read_bytes()
            try:
                doc = json.loads(raw)
                provenance = doc["provenance"]
            except (ValueError, KeyError):
                continue
            self.jobs[job_id] = AnalysisJob(
                job_id=job_id,
                dataset_id="",
                config=provenance.get("config", {}),
                seed=provenance.get("seed", 0),
                status="done",
                result_bytes=raw,
            )

    def persist_dataset(self, session: Session):
        if self.data_dir:
            path = self.data_dir / "datasets" / f"{session.dataset_id}.csv"
            path.write_bytes(session.data)

    def persist_result(self, job: AnalysisJob):
        if self.data_dir:
            path = self.data_dir / "results" / f"{job.job_id}.json"
            path.write_bytes(job.result_bytes)


def _error_response(status: int, code: str, message: str,
                    detail: str | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def _map_error(exc: EffectBenchError) -> JSONResponse:
    code = {
        ParseError: "parse_error",
        ConfigError: "config_error",
        DataError: "data_error",
    }.get(type(exc), "error")
    return _error_response(422, code, str(exc))


def _worker(registry: Registry):
    while True:
        job_id = registry.queue.get()
        with registry.lock:
            job = registry.jobs.get(job_id)
            if job is None:
                continue
            job.status = "running"
            session = registry.sessions[job.dataset_id]

        def progress(stage: str, job=job):
            with registry.lock:
                job.stage = stage

        try:
            cfg = AnalysisConfig.from_json_dict(job.config)
            doc = run_analysis(session.raw, cfg, seed=job.seed,
                               progress=progress)
            payload = doc.to_bytes()
            with registry.lock:
                job.result_bytes = payload
                job.status = "done"
                job.stage = None
            registry.persist_result(job)
        except Exception as exc:  # noqa: BLE001 - job failure is a state
            with registry.lock:
                job.status = "failed"
                job.error_detail = str(exc)
                job.stage = None


def create_app(data_dir: str | None = None) -> FastAPI:
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV) or None
    registry = Registry(data_dir)
    threading.Thread(target=_worker, args=(registry,), daemon=True).start()

    app = FastAPI(title="effectbench", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.registry = registry

    def get_session(dataset_id: str) -> Session | None:
        with registry.lock:
            return registry.sessions.get(dataset_id)

    def parse_config(table: RawTable, payload) -> AnalysisConfig:
        cfg = AnalysisConfig.from_json_dict(payload)
        cfg, _ = preflight(table, cfg)
        return cfg

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request):
        body = await request.body()
        if not body:
            return _error_response(400, "empty_body", "request body is empty")
        try:
            table = parse_csv(body)
        except EffectBenchError as exc:
            return _map_error(exc)
        session = Session(f"d-{uuid.uuid4().hex[:12]}", table, body)
        with registry.lock:
            registry.sessions[session.dataset_id] = session
        registry.persist_dataset(session)
        return {
            "dataset_id": session.dataset_id,
            "column_names": table.column_names,
            "n_rows": table.n_rows,
        }

    @app.post("/datasets/{dataset_id}/analyses", status_code=202)
    async def start_analysis(dataset_id: str, request: Request):
        session = get_session(dataset_id)
        if session is None:
            return _error_response(404, "not_found",
                                   f"unknown dataset {dataset_id}")
        try:
            payload = await request.json()
        except ValueError:
            return _error_response(422, "config_error",
                                   "request body is not valid JSON")
        if not isinstance(payload, dict) or "config" not in payload:
            return _error_response(422, "config_error",
                                   "body must be {config, seed?}")
        seed = payload.get("seed", 0)
        if not isinstance(seed, int):
            return _error_response(422, "config_error",
                                   "seed must be an integer")
        try:
            parse_config(session.raw, payload["config"])
        except EffectBenchError as exc:
            return _map_error(exc)
        job = AnalysisJob(
            job_id=f"j-{uuid.uuid4().hex[:12]}",
            dataset_id=dataset_id,
            config=payload["config"],
            seed=seed,
        )
        with registry.lock:
            registry.jobs[job.job_id] = job
        registry.queue.put(job.job_id)
        return {"job_id": job.job_id}

    @app.get("/analyses/{job_id}/status")
    async def job_status(job_id: str):
        with registry.lock:
            job = registry.jobs.get(job_id)
            if job is None:
                return _error_response(404, "not_found",
                                       f"unknown job {job_id}")
            return job.status_payload()

    @app.get("/analyses/{job_id}/results")
    async def get_results(job_id: str):
        with registry.lock:
            job = registry.jobs.get(job_id)
        if job is None:
            return _error_response(404, "not_found", f"unknown job {job_id}")
        if job.status != "done":
            return _error_response(
                409, "not_done",
                f"job is {job.status}",
                job.error_detail if job.status == "failed" else None)
        return Response(content=job.result_bytes,
                        media_type="application/json")

    @app.get("/datasets/{dataset_id}/overview")
    async def dataset_overview(dataset_id: str, config: str = ""):
        session = get_session(dataset_id)
        if session is None:
            return _error_response(404, "not_found",
                                   f"unknown dataset {dataset_id}")
        if not config:
            return _error_response(422, "config_error",
                                   "config query parameter is required")
        try:
            cfg = parse_config(session.raw, json.loads(unquote(config)))
        except ValueError:
            return _error_response(422, "config_error",
                                   "config query parameter is not valid JSON")
        except EffectBenchError as exc:
            return _map_error(exc)
        surv = None
        if cfg.analysis_kind == "survival":
            try:
                surv = derive_survival(session.raw, cfg)
            except EffectBenchError as exc:
                return _map_error(exc)
        stats = overview(session.raw, cfg, surv)
        return JSONResponse(content=sanitize(stats.to_json_dict()))

    @app.get("/datasets/{dataset_id}/eda")
    async def dataset_eda(dataset_id: str, variable: str = "",
                          kind: str = "", config: str = ""):
        session = get_session(dataset_id)
        if session is None:
            return _error_response(404, "not_found",
                                   f"unknown dataset {dataset_id}")
        if not variable:
            return _error_response(422, "config_error",
                                   "variable query parameter is required")
        if not config:
            return _error_response(422, "config_error",
                                   "config query parameter is required")
        try:
            cfg = parse_config(session.raw, json.loads(unquote(config)))
            report = eda_variable(session.raw, variable, cfg,
                                  kind=kind or None)
        except ValueError:
            return _error_response(422, "config_error",
                                   "config query parameter is not valid JSON")
        except EffectBenchError as exc:
            return _map_error(exc)
        return JSONResponse(content=sanitize(report.to_json_dict()))

    @app.post("/datasets/{dataset_id}/table1")
    async def dataset_table1(dataset_id: str, request: Request):
        session = get_session(dataset_id)
        if session is None:
            return _error_response(404, "not_found",
                                   f"unknown dataset {dataset_id}")
        try:
            payload = await request.json()
        except ValueError:
            return _error_response(422, "config_error",
                                   "request body is not valid JSON")
        if not isinstance(payload, dict) or "config" not in payload:
            return _error_response(422, "config_error",
                                   "body must be {config}")
        try:
            cfg = parse_config(session.raw, payload["config"])
        except EffectBenchError as exc:
            return _map_error(exc)
        t1 = table1(session.raw, cfg)
        return JSONResponse(content=sanitize({
            "table1": t1.to_json_dict(),
            "tsv": table1_tsv(t1, cfg.treatment_column),
        }))

    @app.post("/datasets/{dataset_id}/correlation")
    async def dataset_correlation(dataset_id: str, request: Request):
        session = get_session(dataset_id)
        if session is None:
            return _error_response(404, "not_found",
                                   f"unknown dataset {dataset_id}")
        try:
            payload = await request.json()
        except ValueError:
            return _error_response(422, "config_error",
                                   "request body is not valid JSON")
        variables = payload.get("variables") if isinstance(payload, dict) else None
        if not isinstance(variables, list):
            return _error_response(422, "config_error",
                                   "body must be {variables: [...]}")
        try:
            result = corr_matrix(session.raw, variables)
        except EffectBenchError as exc:
            return _map_error(exc)
        return JSONResponse(content=sanitize(result))

    return app


app = create_app()
