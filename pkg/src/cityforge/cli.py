"""Command-line interface.

    cityforge --project DIR [--mock] [--seed N] plan "a modern city" [--size 2x3]
    cityforge --project DIR generate
    cityforge --project DIR expand "add a middle school"
    cityforge --project DIR assemble [--style style.json]
    cityforge --project DIR serve [--bind 127.0.0.1:8000]
    cityforge eval DIR_A DIR_B [--votes votes.csv]
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .assembly import Material, StyleConfig
from .config import EngineConfig, load_config
from .errors import CityForgeError
from .evalharness import format_report, run_eval
from .model import index_of, parse_grid_size
from .orchestrator import (
    assemble_project,
    expand_city,
    generate_tiles,
    plan_project,
)
from .providers import ProviderSet
from .providers.http import (
    HttpChatClient,
    HttpEmbedClient,
    HttpImageEditClient,
    HttpImageGenClient,
    HttpMeshClient,
)
from .providers.mocks import mock_provider_set
from .store import ProjectStore


def build_providers(config: EngineConfig) -> ProviderSet:
    if config.mock:
        return mock_provider_set(seed=config.seed, config=config.provider_config("chat"))
    roles = ("chat", "image", "edit", "mesh", "embed")
    missing = [r for r in roles if not config.provider_config(r).endpoint]
    if missing:
        raise CityForgeError(
            f"no endpoint configured for providers {missing}; "
            "pass --mock or add them to the config file"
        )
    return ProviderSet(
        chat_backend=HttpChatClient(config.provider_config("chat")),
        image_backend=HttpImageGenClient(config.provider_config("image")),
        edit_backend=HttpImageEditClient(config.provider_config("edit")),
        mesh_backend=HttpMeshClient(config.provider_config("mesh")),
        embed_backend=HttpEmbedClient(config.provider_config("embed")),
        config=config.provider_config("chat"),
    )


def _load_style(path: str | None) -> StyleConfig | None:
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    style = StyleConfig()
    if "road_material" in data:
        m = data["road_material"]
        style = dataclasses.replace(
            style, road_material=Material(tuple(m["rgba"]), m["roughness"])
        )
    if "ground_material" in data:
        m = data["ground_material"]
        style = dataclasses.replace(
            style, ground_material=Material(tuple(m["rgba"]), m["roughness"])
        )
    return style


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cityforge", description=__doc__)
    parser.add_argument("--project", default="city-project", help="project directory")
    parser.add_argument("--config", default=None, help="engine config JSON file")
    parser.add_argument("--seed", type=int, default=None, help="mock determinism seed")
    parser.add_argument("--mock", action="store_true", help="use offline mock providers")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan the layout and design all tiles")
    p_plan.add_argument("prompt")
    p_plan.add_argument("--size", default=None, help="force grid size, e.g. 2x3")
    p_plan.add_argument("--reference-city", default=None)

    sub.add_parser("generate", help="run the image loop for all pending tiles")

    p_expand = sub.add_parser("expand", help="expand the city by one grid")
    p_expand.add_argument("request")

    p_assemble = sub.add_parser("assemble", help="write the scene manifest")
    p_assemble.add_argument("--style", default=None, help="style override JSON file")

    p_serve = sub.add_parser("serve", help="serve the HTTP API and UI")
    p_serve.add_argument("--bind", default="127.0.0.1:8000")
    p_serve.add_argument("--frontend", default=None, help="built UI directory")

    p_eval = sub.add_parser("eval", help="pairwise comparison of two projects")
    p_eval.add_argument("dir_a")
    p_eval.add_argument("dir_b")
    p_eval.add_argument("--votes", default=None, help="human votes CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    config = load_config(args.config) if args.config else EngineConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.mock:
        config = dataclasses.replace(config, mock=True)
    store = ProjectStore(args.project)
    try:
        providers = build_providers(config)
        if args.command == "plan":
            forced = parse_grid_size(args.size) if args.size else None
            project = plan_project(
                args.prompt, store, providers, config,
                forced_size=forced, reference_city=args.reference_city,
            )
            layout = project.layout
            print(f"planned {layout.rows}x{layout.cols} city with {len(layout.districts)} districts:")
            for district in layout.districts.values():
                print(f"  {district.district_id}: cells {district.grid_indices}")
        elif args.command == "generate":
            project = generate_tiles(store.load_project(), store, providers, config)
            print(f"generated {len(project.assets)} tiles")
        elif args.command == "expand":
            expanded, record = expand_city(
                store.load_project(), args.request, store, providers, config
            )
            dr, dc = record.translation
            cell = record.chosen.shifted(dr, dc)
            print(
                f"expanded at ({cell.row}, {cell.col}) as district "
                f"{record.district_id} (index {index_of(cell, expanded.layout.cols)})"
            )
        elif args.command == "assemble":
            manifest = assemble_project(
                store.load_project(), store, config, style=_load_style(args.style)
            )
            print(
                f"wrote {store.manifest_path} with {len(manifest.placements)} placements "
                f"and {len(manifest.roads)} road segments"
            )
        elif args.command == "serve":
            import uvicorn

            from .server import create_app

            host, _, port = args.bind.partition(":")
            app = create_app(store, providers, config, frontend_dir=args.frontend)
            uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
        elif args.command == "eval":
            report = run_eval(
                ProjectStore(args.dir_a),
                ProjectStore(args.dir_b),
                providers,
                config,
                human_votes=args.votes,
            )
            print(format_report(report))
            report_path = Path(args.dir_a) / "eval.report.json"
            report_path.write_text(json.dumps(report, indent=2), encoding="utf-8")
            print(f"\nreport written to {report_path}")
    except CityForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
