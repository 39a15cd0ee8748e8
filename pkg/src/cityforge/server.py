"""HTTP API serving the companion UI.

Every mutating endpoint delegates to the same orchestrator operations as the
CLI; mutations run on the job manager's single worker thread, so concurrent
expansion requests queue rather than interleave.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles

from .config import EngineConfig
from .jobs import JobManager, JobStatus
from .model import CityProject, index_of
from .orchestrator import expand_city, run_pipeline
from .providers import ProviderSet
from .store import ProjectStore


def project_view(project: CityProject, store: ProjectStore) -> dict:
    layout = project.layout
    tiles = {}
    for cell in layout.occupied():
        index = index_of(cell, layout.cols)
        done = index in project.assets
        tiles[str(index)] = {
            "status": "done" if done else "pending",
            "image": f"/api/tiles/{index}/image" if done else None,
            "below_threshold": project.assets[index].below_threshold if done else False,
        }
    return {
        "id": project.id,
        "prompt": project.prompt,
        "rows": layout.rows,
        "cols": layout.cols,
        "districts": {
            d.district_id: {"name": d.name, "description": d.description}
            for d in layout.districts.values()
        },
        "cells": [[c.row, c.col, d] for c, d in sorted(layout.cells.items())],
        "tiles": tiles,
        "history_length": len(project.history),
    }


def create_app(
    store: ProjectStore,
    providers: ProviderSet,
    config: EngineConfig,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="cityforge", version="0.1.0")
    jobs = JobManager()
    app.state.jobs = jobs

    def load_or_404() -> CityProject:
        if not store.exists():
            raise HTTPException(status_code=404, detail="no project in store")
        return store.load_project()

    @app.get("/api/project")
    def get_project() -> dict:
        return project_view(load_or_404(), store)

    @app.post("/api/plan")
    def post_plan(payload: dict = Body(...)) -> dict:
        prompt = str(payload.get("prompt", "")).strip()
        if not prompt:
            raise HTTPException(status_code=422, detail="prompt is required")
        forced = payload.get("forced_size")
        forced_size = (int(forced[0]), int(forced[1])) if forced else None

        def work(status: JobStatus) -> dict:
            def on_progress(fraction: float) -> None:
                status.progress = fraction

            project = run_pipeline(
                prompt, store, providers, config,
                forced_size=forced_size, progress=on_progress,
            )
            return {"rows": project.layout.rows, "cols": project.layout.cols}

        return {"job": jobs.submit("plan", work).job_id}

    @app.post("/api/expand")
    def post_expand(payload: dict = Body(...)) -> dict:
        request_text = str(payload.get("request", "")).strip()
        if not request_text:
            raise HTTPException(status_code=422, detail="request is required")

        def work(status: JobStatus) -> dict:
            project = store.load_project()
            expanded, record = expand_city(project, request_text, store, providers, config)
            dr, dc = record.translation
            chosen_after = [record.chosen.row + dr, record.chosen.col + dc]
            return {
                "record": record.to_dict(),
                "chosen": chosen_after,
                "district_id": record.district_id,
                "history_index": len(expanded.history) - 1,
            }

        return {"job": jobs.submit("expand", work).job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job.to_dict()

    @app.get("/api/candidates")
    def get_candidates(job: str) -> dict:
        status = jobs.get(job)
        if status is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job}")
        if status.state != "done" or not status.result or "record" not in status.result:
            raise HTTPException(status_code=409, detail=f"job {job} has no record")
        return status.result["record"]

    @app.get("/api/tiles/{index}/image")
    def get_tile_image(index: int) -> Response:
        data = store.read_tile_image(index)
        if data is None:
            raise HTTPException(status_code=404, detail=f"tile {index} has no image")
        return Response(content=data, media_type="image/png")

    @app.get("/api/history")
    def get_history() -> dict:
        return {"records": [r.to_dict() for r in store.read_history()]}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
