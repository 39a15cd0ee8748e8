"""End-to-end pipeline: plan, design, parallel tile loops, assembly, and the
expansion workflow. All stages persist through the project store and resume
from whatever artifacts already exist."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

from .assembly import SceneManifest, StyleConfig, assemble
from .config import EngineConfig
from .errors import PipelineError
from .expansion import (
    apply_expansion,
    index_remap,
    infer_expansion,
    new_tile_index,
    select_location,
)
from .genloop import TileJob, run_loop
from .imaging import compose_board
from .model import (
    AssetRef,
    CityLayout,
    CityProject,
    ExpansionRecord,
    GridCoord,
    index_of,
    layout_from_dict,
    layout_to_dict,
)
from .planner import PlanRequest, design_city, global_plan, retrieve_reference_summary
from .providers import ProviderSet
from .store import ProjectStore


def _copy_layout(layout: CityLayout) -> CityLayout:
    return layout_from_dict(layout_to_dict(layout))


def _project_id(prompt: str, seed: int) -> str:
    return hashlib.sha256(f"{seed}|{prompt}".encode()).hexdigest()[:12]


def city_overview(layout: CityLayout) -> str:
    """District names and descriptions as JSON, the expansion call's zone list."""
    zones = [
        {"name": d.name, "description": d.description}
        for d in sorted(layout.districts.values(), key=lambda d: d.district_id)
    ]
    return json.dumps(zones, indent=2)


def compose_render(project: CityProject, store: ProjectStore) -> bytes:
    """Top-down board image stitched from per-tile finals (mock render path)."""
    layout = project.layout
    images: dict[GridCoord, bytes] = {}
    for cell in layout.occupied():
        data = store.read_tile_image(index_of(cell, layout.cols))
        if data is not None:
            images[cell] = data
    return compose_board(layout, images)


def plan_project(
    prompt: str,
    store: ProjectStore,
    providers: ProviderSet,
    config: EngineConfig,
    forced_size: tuple[int, int] | None = None,
    reference_city: str | None = None,
) -> CityProject:
    """Plan and design stages; each is skipped when its outputs already exist."""
    if store.exists():
        project = store.load_project()
    else:
        summary = None
        if reference_city:
            corpus = store.load_corpus()
            summary = retrieve_reference_summary(
                corpus,
                reference_city,
                providers,
                k=config.retrieval_k,
                max_traits_chars=config.max_traits_chars,
            )
        request = PlanRequest(
            prompt=prompt, forced_size=forced_size, reference_city=reference_city
        )
        outcome = global_plan(request, providers, summary, retries=config.plan_retries)
        project = CityProject(
            id=_project_id(prompt, config.seed),
            prompt=prompt,
            layout=outcome.layout,
            initial_layout=_copy_layout(outcome.layout),
        )
        store.save_project(project)
    needed = {index_of(c, project.layout.cols) for c in project.layout.occupied()}
    if needed - set(project.descriptions):
        project.descriptions = design_city(
            project.layout, project.prompt, providers, retries=config.design_retries
        )
        store.save_project(project)
    return project


def generate_tiles(
    project: CityProject,
    store: ProjectStore,
    providers: ProviderSet,
    config: EngineConfig,
    progress: Callable[[float], None] | None = None,
) -> CityProject:
    """Run the image loop for every tile without a finished asset, bounded by
    the worker pool. Completed tiles are never re-executed."""
    layout = project.layout
    pending: list[int] = []
    for cell in layout.occupied():
        index = index_of(cell, layout.cols)
        if store.tile_complete(index):
            if index not in project.assets:
                meta = store.read_tile_meta(index) or {}
                project.assets[index] = AssetRef(
                    bbox=tuple(meta.get("bbox", (1.0, 1.0, 1.0))),
                    fmt=meta.get("format", "glb"),
                    below_threshold=bool(meta.get("below_threshold", False)),
                )
            continue
        if index not in project.descriptions:
            raise PipelineError("design", f"tile {index} has no description")
        pending.append(index)

    done = len(layout.cells) - len(pending)
    total = max(1, len(layout.cells))
    if progress:
        progress(done / total)

    def run_one(index: int) -> TileJob:
        job = TileJob(
            index=index,
            description=project.descriptions[index].text,
            city_prompt=project.prompt,
        )
        return run_loop(job, providers, config.loop, sink=store)

    failures: list[tuple[int, str]] = []
    if pending:
        with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
            for job in pool.map(run_one, sorted(pending)):
                if job.status == "done" and job.mesh is not None:
                    project.assets[job.index] = AssetRef(
                        bbox=job.mesh.bbox,
                        fmt=job.mesh.fmt,
                        below_threshold=job.below_threshold,
                    )
                    store.write_tile_meta(
                        job.index,
                        {
                            "bbox": [float(v) for v in job.mesh.bbox],
                            "format": job.mesh.fmt,
                            "below_threshold": job.below_threshold,
                            "iterations": len(job.iterations),
                        },
                    )
                else:
                    failures.append((job.index, job.error or "unknown"))
                done += 1
                if progress:
                    progress(done / total)
    store.save_project(project)
    if failures:
        detail = "; ".join(f"tile {i}: {err}" for i, err in failures)
        raise PipelineError("generate", detail)
    return project


def assemble_project(
    project: CityProject,
    store: ProjectStore,
    config: EngineConfig,
    style: StyleConfig | None = None,
    connections: list[tuple[int, int]] | None = None,
) -> SceneManifest:
    manifest = assemble(project, style or config.style, config.assembly, connections)
    store.write_manifest(manifest.to_json())
    return manifest


def run_pipeline(
    prompt: str,
    store: ProjectStore,
    providers: ProviderSet,
    config: EngineConfig,
    forced_size: tuple[int, int] | None = None,
    reference_city: str | None = None,
    progress: Callable[[float], None] | None = None,
) -> CityProject:
    """plan -> design -> parallel tile loops -> assemble, persisting each stage."""
    project = plan_project(prompt, store, providers, config, forced_size, reference_city)
    project = generate_tiles(project, store, providers, config, progress)
    assemble_project(project, store, config)
    return project


def expand_city(
    project: CityProject,
    user_request: str,
    store: ProjectStore,
    providers: ProviderSet,
    config: EngineConfig,
) -> tuple[CityProject, ExpansionRecord]:
    """One expansion step: infer the scene graph, optimize the location, commit,
    generate the new tile, and re-assemble.

    Inference and selection run before anything mutates, so their errors leave
    the project untouched.
    """
    render = compose_render(project, store)
    overview = city_overview(project.layout)
    graph = infer_expansion(
        render,
        overview,
        user_request,
        project.layout,
        providers,
        retries=config.expansion_retries,
    )
    chosen, breakdowns = select_location(
        project.layout,
        project.descriptions,
        graph,
        providers,
        lam=config.lambda_semantic,
        weights=config.relation_weights,
        normalize_by_district_size=config.normalize_distance_by_district_size,
    )
    old_layout = project.layout
    expanded = apply_expansion(project, graph, chosen, breakdowns, request=user_request)
    record = expanded.history[-1]
    store.remap_tiles(index_remap(old_layout, record.translation, expanded.layout.cols))
    store.save_project(expanded)
    store.append_history(record)

    index = new_tile_index(record, expanded.layout)
    job = TileJob(
        index=index,
        description=expanded.descriptions[index].text,
        city_prompt=expanded.prompt,
    )
    run_loop(job, providers, config.loop, sink=store)
    if job.status != "done" or job.mesh is None:
        raise PipelineError("expand", f"tile {index}: {job.error or 'loop failed'}")
    expanded.assets[index] = AssetRef(
        bbox=job.mesh.bbox, fmt=job.mesh.fmt, below_threshold=job.below_threshold
    )
    store.write_tile_meta(
        index,
        {
            "bbox": [float(v) for v in job.mesh.bbox],
            "format": job.mesh.fmt,
            "below_threshold": job.below_threshold,
            "iterations": len(job.iterations),
        },
    )
    store.save_project(expanded)
    assemble_project(expanded, store, config)
    return expanded, record
