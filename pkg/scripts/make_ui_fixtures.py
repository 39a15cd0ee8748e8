#!/usr/bin/env python3
"""Regenerate the frontend test fixtures from the engine itself.

Runs the mock pipeline plus scripted expansions and dumps the exact payloads
the HTTP API would serve, so the UI tests exercise real server data.

    python3 scripts/make_ui_fixtures.py
"""

from __future__ import annotations

import json
import shutil
import tempfile
from pathlib import Path

from cityforge.config import EngineConfig
from cityforge.model import index_of
from cityforge.orchestrator import expand_city, run_pipeline
from cityforge.providers.mocks import mock_provider_set
from cityforge.server import project_view
from cityforge.store import ProjectStore

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"

SCENARIOS = {
    "scenario1": [
        {
            "block_name": "Middle School Block",
            "block_description": "Classroom wings around a central courtyard.",
            "spatial_relations": {"Residential District": "near"},
        }
    ],
    "scenario2": [
        {
            "block_name": "Logistics Depot",
            "block_description": "Long-span warehouse halls with loading aprons.",
            "spatial_relations": {
                "Commercial Center": "near",
                "Residential District": "slightly_near",
            },
        }
    ],
    # two steps; the first pulls above row 0 and forces a re-origin shift
    "scenario3": [
        {
            "block_name": "Lakeside School",
            "block_description": "A low campus of classroom wings.",
            "spatial_relations": {
                "Residential District": "near",
                "Commercial Center": "far",
            },
        },
        {
            "block_name": "Observatory",
            "block_description": "A domed instrument tower on a stepped plinth.",
            "spatial_relations": {},
        },
    ],
}


def build_city(root: Path, expansions: list[dict]) -> dict:
    store = ProjectStore(root)
    script = {"expansion": [json.dumps(e) for e in expansions]}
    providers = mock_provider_set(seed=7, script=script)
    config = EngineConfig(seed=7, mock=True)
    project = run_pipeline("a modern city", store, providers, config)
    record = None
    for expansion in expansions:
        project, record = expand_city(
            project, expansion["block_name"], store, providers, config
        )
    payload = {
        "project": project_view(project, store),
        "history": [r.to_dict() for r in store.read_history()],
    }
    if record is not None:
        dr, dc = record.translation
        cell = record.chosen.shifted(dr, dc)
        payload["record"] = record.to_dict()
        payload["chosen_after"] = [cell.row, cell.col]
        payload["new_index"] = index_of(cell, project.layout.cols)
    return payload


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    work = Path(tempfile.mkdtemp(prefix="ui-fixtures-"))
    try:
        board = build_city(work / "board", [])
        (FIXTURES / "board.json").write_text(json.dumps(board, indent=2) + "\n")
        print(f"wrote board.json ({board['project']['rows']}x{board['project']['cols']})")
        for name, expansions in SCENARIOS.items():
            payload = build_city(work / name, expansions)
            (FIXTURES / f"{name}.json").write_text(json.dumps(payload, indent=2) + "\n")
            print(
                f"wrote {name}.json (chosen_after={payload['chosen_after']}, "
                f"steps={len(payload['history'])})"
            )
    finally:
        shutil.rmtree(work, ignore_errors=True)


if __name__ == "__main__":
    main()
