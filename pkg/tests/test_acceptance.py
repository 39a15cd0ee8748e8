"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (run with ``pytest tests/test_acceptance.py -s -v``).

Everything here runs offline on the deterministic mock providers.
"""

import json
import math
import random
import time
from contextlib import contextmanager

import pytest

from cityforge.assembly import DEFAULT_GROUND_RGBA, DEFAULT_ROAD_RGBA, DEFAULT_ROUGHNESS
from cityforge.cli import main as cli_main
from cityforge.config import EngineConfig
from cityforge.errors import CoverageError, OverlapError
from cityforge.evalharness import DIMENSIONS, run_eval
from cityforge.expansion import (
    RELATION_WEIGHTS,
    Relation,
    SceneGraph,
    replay_history,
    select_location,
)
from cityforge.genloop import TileJob, run_loop
from cityforge.model import GridCoord, index_of, validate_layout
from cityforge.orchestrator import expand_city, run_pipeline
from cityforge.providers.mocks import (
    ConstantEmbedMock,
    HashEmbedMock,
    mock_provider_set,
)
from cityforge.store import ProjectStore
from helpers import EXAMPLE_PLAN_1X3, descriptions_for, make_layout
from oracle import oracle_argmin

CFG = EngineConfig(seed=7, mock=True)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[FAIL] {name}")
        raise
    print(f"\n[PASS] {name}")


def random_instance(rng):
    rows, cols = rng.randint(1, 6), rng.randint(1, 6)
    district_ids = [f"d{i}" for i in range(rng.randint(1, 5))]
    cell_map = {}
    for r in range(rows):
        for c in range(cols):
            if rng.random() < 0.7:
                cell_map[(r, c)] = rng.choice(district_ids)
    if not cell_map:
        cell_map[(rng.randrange(rows), rng.randrange(cols))] = district_ids[0]
    tokens = {
        d: rng.choice(
            ["near", "relatively_near", "slightly_near", "no_special_constraint", "far"]
        )
        for d in sorted(set(cell_map.values()))
    }
    return cell_map, tokens


def test_placement_oracle_equivalence():
    """select_location == exhaustive argmin on 200 random instances, < 5 s."""
    with criterion("placement oracle equivalence (200 randomized instances)"):
        rng = random.Random(424242)
        embedder = HashEmbedMock(seed=99)
        providers = mock_provider_set(seed=99)
        started = time.perf_counter()
        matches = 0
        for trial in range(200):
            cell_map, tokens = random_instance(rng)
            layout = make_layout(cell_map)
            descriptions = descriptions_for(layout)
            lam = rng.choice([0.0, 0.5, 1.0])
            graph = SceneGraph(
                "new",
                f"candidate block {trial}",
                {
                    d: Relation(t)
                    for d, t in tokens.items()
                    if t != "no_special_constraint"
                },
            )
            chosen, _ = select_location(layout, descriptions, graph, providers, lam=lam)
            neighbor_vecs = {
                (cell.row, cell.col): embedder.embed(
                    descriptions[index_of(cell, layout.cols)].text
                ).values
                for cell in layout.occupied()
            }
            expected = oracle_argmin(
                {(c.row, c.col): d for c, d in layout.cells.items()},
                tokens,
                embedder.embed(graph.new_description).values,
                neighbor_vecs,
                lam,
            )
            assert (chosen.row, chosen.col) == expected, f"trial {trial}"
            matches += 1
        elapsed = time.perf_counter() - started
        assert matches == 200
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_worked_column_example():
    """The near/neutral/far column instance reproduces the derived values."""
    with criterion("worked example: occupied column distances and selection"):
        layout = make_layout({(0, 0): "a", (1, 0): "c", (2, 0): "b"})
        graph = SceneGraph(
            "new", "new block", {"a": Relation.NEAR, "b": Relation.FAR}
        )
        providers = mock_provider_set(seed=0, embed=ConstantEmbedMock())
        candidates = [GridCoord(0, 1), GridCoord(1, 1), GridCoord(2, 1)]
        chosen, breakdowns = select_location(
            layout, descriptions_for(layout), graph, providers, lam=1.0,
            candidates=candidates,
        )
        values = {b.candidate: b.l_dist for b in breakdowns}
        # brute-force evaluation: 1*1 - 1*sqrt(5) (rounds to -1.23607)
        exact = 1.0 - math.sqrt(5.0)
        assert values[GridCoord(0, 1)] == pytest.approx(exact, abs=1e-6)
        assert values[GridCoord(1, 1)] == pytest.approx(0.0, abs=1e-6)
        assert values[GridCoord(2, 1)] == pytest.approx(-exact, abs=1e-6)
        assert round(values[GridCoord(0, 1)], 5) == -1.23607
        assert round(values[GridCoord(2, 1)], 5) == 1.23607
        assert chosen == GridCoord(0, 1)


def test_constants_conformance():
    """Optimizer, loop, and material constants match the shipped defaults."""
    with criterion("constants conformance (weights, lambda, loop, materials)"):
        assert RELATION_WEIGHTS[Relation.NEAR] == 1.0
        assert RELATION_WEIGHTS[Relation.RELATIVELY_NEAR] == 0.5
        assert RELATION_WEIGHTS[Relation.SLIGHTLY_NEAR] == 0.1
        assert RELATION_WEIGHTS[Relation.NO_SPECIAL_CONSTRAINT] == 0.0
        assert RELATION_WEIGHTS[Relation.FAR] == -1.0
        config = EngineConfig()
        assert config.relation_weights == RELATION_WEIGHTS
        assert config.lambda_semantic == 1.0
        assert config.score_threshold == 6
        assert config.max_iterations == 3
        assert DEFAULT_ROAD_RGBA == (0.15, 0.15, 0.15, 1.0)
        assert DEFAULT_GROUND_RGBA == (0.50, 0.50, 0.50, 1.0)
        assert DEFAULT_ROUGHNESS == 0.9
        assert config.style.road_material.rgba == (0.15, 0.15, 0.15, 1.0)
        assert config.style.ground_material.rgba == (0.50, 0.50, 0.50, 1.0)
        assert config.style.road_material.roughness == 0.9
        assert config.style.ground_material.roughness == 0.9


def _loop_with_scores(scores):
    script = {
        "image_evaluate": [
            f"Score: {s}\nReason: r{i}\nRewrite: rewrite {i}"
            for i, s in enumerate(scores, start=1)
        ]
    }
    providers = mock_provider_set(seed=0, script=script)
    return run_loop(
        TileJob(index=1, description="seed prompt", city_prompt="city"), providers
    )


def test_loop_behavior():
    """Scripted verdict sequences drive exactly the specified iteration counts."""
    with criterion("produce-refine-evaluate loop behavior"):
        job = _loop_with_scores([4, 5, 7])
        assert job.status == "done"
        assert len(job.iterations) == 3
        assert job.iterations[2].verdict.score == 7
        assert job.below_threshold is False

        job = _loop_with_scores([8])
        assert len(job.iterations) == 1
        assert job.status == "done"

        job = _loop_with_scores([4, 4, 5])
        assert len(job.iterations) == 3
        assert job.below_threshold is True
        assert job.final_image == job.iterations[2].refined_image

        for scores in ([4, 5, 7], [4, 4, 5]):
            job = _loop_with_scores(scores)
            for prev, nxt in zip(job.iterations, job.iterations[1:]):
                assert nxt.prompt_used == prev.verdict.rewrite


def test_layout_validation():
    """The template's example plan and a multi-cell span validate; injected
    overlap and coverage defects raise the right error types."""
    with criterion("layout validation (example plan, overlap, coverage)"):
        layout = validate_layout(EXAMPLE_PLAN_1X3)
        assert (layout.rows, layout.cols) == (1, 3)
        assert len(layout.districts) == 2

        spanning = validate_layout(
            {
                "Grid Size": "2×3",
                "Areas": {
                    "Big Residential": {"Description": "", "Grid Index": [1, 2, 4, 5]},
                    "Edge": {"Description": "", "Grid Index": [3, 6]},
                },
            }
        )
        assert spanning.districts["big-residential"].grid_indices == [1, 2, 4, 5]

        with pytest.raises(OverlapError):
            validate_layout(
                {
                    "Grid Size": "2x2",
                    "Areas": {
                        "A": {"Description": "", "Grid Index": [1, 2]},
                        "B": {"Description": "", "Grid Index": [2, 3, 4]},
                    },
                }
            )
        with pytest.raises(CoverageError):
            validate_layout(
                {
                    "Grid Size": "2x2",
                    "Areas": {"A": {"Description": "", "Grid Index": [1, 4]}},
                }
            )


def test_end_to_end_determinism(tmp_path):
    """Two full mock runs produce byte-identical manifests with the expected
    placement and road counts, in under a minute."""
    with criterion("end-to-end determinism (plan -> generate -> assemble)"):
        started = time.perf_counter()
        manifests = []
        for name in ("run-one", "run-two"):
            project_dir = str(tmp_path / name)
            base = ["--project", project_dir, "--mock", "--seed", "7"]
            assert cli_main([*base, "plan", "a modern city"]) == 0
            assert cli_main([*base, "generate"]) == 0
            assert cli_main([*base, "assemble"]) == 0
            manifests.append((tmp_path / name / "scene.manifest.json").read_bytes())
        assert manifests[0] == manifests[1]
        manifest = json.loads(manifests[0])
        assert len(manifest["placements"]) == 6
        assert len(manifest["roads"]) == 7
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"took {elapsed:.2f}s"


SCRIPTED_EXPANSIONS = [
    {
        "block_name": "Lakeside School",
        "block_description": "A low campus of classroom wings around a shared court.",
        "spatial_relations": {"Residential District": "near", "Commercial Center": "far"},
    },
    {
        "block_name": "Transit Hub",
        "block_description": "A concourse hall with platform canopies and bus bays.",
        "spatial_relations": {"Commercial Center": "near"},
    },
    {
        "block_name": "Artisan Market",
        "block_description": "A cluster of open market halls with saw-tooth roofs.",
        "spatial_relations": {"Residential District": "relatively_near"},
    },
    {
        "block_name": "Observatory",
        "block_description": "A domed instrument tower on a stepped plinth.",
        "spatial_relations": {},
    },
]


def test_expansion_replay_and_translation_invariance(tmp_path):
    """Four scripted expansions replay exactly; a rigid shift of the seed city
    shifts the optimizer's choice by the same vector."""
    with criterion("expansion replay (4 steps) and translation invariance"):
        store = ProjectStore(tmp_path / "city")
        script = {"expansion": [json.dumps(r) for r in SCRIPTED_EXPANSIONS]}
        providers = mock_provider_set(seed=7, script=script)
        project = run_pipeline("a modern city", store, providers, CFG)
        for request in ("school", "transit hub", "market", "observatory"):
            project, _ = expand_city(project, request, store, providers, CFG)

        history = store.read_history()
        assert len(history) == 4
        assert any(record.translation != (0, 0) for record in history), (
            "at least one step should exercise the re-origin shift"
        )
        replayed = replay_history(project.initial_layout, history)
        assert replayed.cells == project.layout.cells
        assert (replayed.rows, replayed.cols) == (project.layout.rows, project.layout.cols)

        # translation invariance of the selection itself
        select_providers = mock_provider_set(seed=11)
        graph = SceneGraph(
            "Annex", "an annex block",
            {"a": Relation.NEAR, "b": Relation.FAR},
        )
        base_map = {(0, 0): "a", (0, 1): "a", (1, 0): "b", (2, 2): "c"}
        base = make_layout(base_map)
        base_desc = descriptions_for(base)
        chosen, _ = select_location(base, base_desc, graph, select_providers, lam=1.0)
        for dr, dc in ((1, 2), (3, 1)):
            shifted = make_layout({(r + dr, c + dc): d for (r, c), d in base_map.items()})
            shifted_desc = {}
            for (r, c), _d in base_map.items():
                old_index = index_of(GridCoord(r, c), base.cols)
                new_index = index_of(GridCoord(r + dr, c + dc), shifted.cols)
                shifted_desc[new_index] = type(base_desc[old_index])(
                    index=new_index, text=base_desc[old_index].text
                )
            shifted_chosen, _ = select_location(
                shifted, shifted_desc, graph, select_providers, lam=1.0
            )
            assert (shifted_chosen.row, shifted_chosen.col) == (
                chosen.row + dr,
                chosen.col + dc,
            )


def test_eval_harness_arithmetic(tmp_path):
    """Win rates sum to 100% over valid votes; repeating twice doubles counts."""
    with criterion("eval harness arithmetic (win rates, repeat-twice)"):
        stores = []
        for name, seed in (("a", 7), ("b", 8)):
            store = ProjectStore(tmp_path / name)
            run_pipeline("a modern city", store, mock_provider_set(seed=seed), CFG)
            stores.append(store)
        store_a, store_b = stores

        judged = run_eval(
            store_a, store_b,
            mock_provider_set(seed=7, script={"eval_judge": ["A", "B"] * 5}),
            CFG, repeats=2,
        )
        for dimension in DIMENSIONS:
            stats = judged["dimensions"][dimension]
            assert stats["wins_a"] + stats["wins_b"] + stats["invalid"] == stats["total"]
            assert stats["total"] == 2
            valid = stats["wins_a"] + stats["wins_b"]
            if valid:
                assert stats["rate_a"] + stats["rate_b"] == pytest.approx(1.0)

        with_invalid = run_eval(
            store_a, store_b,
            mock_provider_set(seed=7, script={"eval_judge": ["A", "tie"] * 5}),
            CFG, repeats=2,
        )
        for stats in with_invalid["dimensions"].values():
            assert stats["invalid"] == 1
            assert stats["rate_a"] == 1.0 and stats["rate_b"] == 0.0

        single = run_eval(
            store_a, store_b,
            mock_provider_set(seed=7, script={"eval_judge": ["A"] * 5}),
            CFG, repeats=1,
        )
        for dimension in DIMENSIONS:
            assert single["dimensions"][dimension]["total"] == 1
            assert with_invalid["dimensions"][dimension]["total"] == 2
