"""Relationship-guided expansion.

Given a user's expansion request, a vision-chat call infers the new block's
description and a star scene graph of qualitative distance relations to the
existing districts. Candidate cells are the BFS depth-1 frontier of the
occupied region; each is scored with a signed distance objective plus a
semantic term over its occupied neighbors, and the minimizer wins.

The coordinate plane is unbounded: candidates may be negative, and applying
an expansion re-originates the layout so stored coordinates stay non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import (
    CityForgeError,
    EmbeddingError,
    ExpansionInferenceError,
    NoCandidateError,
    OccupiedError,
)
from .jsonio import extract_json
from .model import (
    AssetRef,
    CityLayout,
    CityProject,
    DistrictBlueprint,
    ExpansionRecord,
    GridCoord,
    GridDescription,
    index_of,
    unique_district_id,
)
from .providers import EmbeddingVector, ProviderSet, cosine


class Relation(Enum):
    NEAR = "near"
    RELATIVELY_NEAR = "relatively_near"
    SLIGHTLY_NEAR = "slightly_near"
    NO_SPECIAL_CONSTRAINT = "no_special_constraint"
    FAR = "far"


# Signed weights: positive pulls the new grid closer, negative pushes it away.
RELATION_WEIGHTS: dict[Relation, float] = {
    Relation.NEAR: 1.0,
    Relation.RELATIVELY_NEAR: 0.5,
    Relation.SLIGHTLY_NEAR: 0.1,
    Relation.NO_SPECIAL_CONSTRAINT: 0.0,
    Relation.FAR: -1.0,
}

DEFAULT_LAMBDA = 1.0

_TIE_EPS = 1e-9

_NEIGHBOR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))


@dataclass
class SceneGraph:
    """Star graph: the new block at the center, relation edges to districts.

    Districts absent from ``edges`` carry no special constraint (weight 0).
    """

    new_block_name: str
    new_description: str
    edges: dict[str, Relation] = field(default_factory=dict)

    def relation_of(self, district_id: str | None) -> Relation:
        if district_id is None:
            return Relation.NO_SPECIAL_CONSTRAINT
        return self.edges.get(district_id, Relation.NO_SPECIAL_CONSTRAINT)

    def to_dict(self) -> dict:
        return {
            "block_name": self.new_block_name,
            "block_description": self.new_description,
            "spatial_relations": {d: r.value for d, r in sorted(self.edges.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SceneGraph":
        return cls(
            new_block_name=data["block_name"],
            new_description=data["block_description"],
            edges={
                d: Relation(token) for d, token in data.get("spatial_relations", {}).items()
            },
        )


@dataclass(frozen=True)
class CandidateSet:
    cells: tuple[GridCoord, ...]


@dataclass(frozen=True)
class ObjectiveBreakdown:
    candidate: GridCoord
    l_dist: float
    l_sem: float
    total: float

    def to_dict(self) -> dict:
        return {
            "candidate": [self.candidate.row, self.candidate.col],
            "l_dist": self.l_dist,
            "l_sem": self.l_sem,
            "total": self.total,
        }


def _normalize_relation_token(token: str) -> Relation:
    cleaned = token.strip().lower().replace(" ", "_").replace("-", "_")
    try:
        return Relation(cleaned)
    except ValueError:
        raise ExpansionInferenceError(f"unknown relation token {token!r}") from None


def infer_expansion(
    city_render: bytes,
    overview: str,
    user_request: str,
    layout: CityLayout,
    providers: ProviderSet,
    retries: int = 2,
) -> SceneGraph:
    """One vision-chat call that names, describes, and relates the new block."""
    if not layout.districts:
        raise ValueError("expansion requires at least one existing district")
    name_to_ids: dict[str, list[str]] = {}
    for district in layout.districts.values():
        name_to_ids.setdefault(district.name, []).append(district.district_id)
    variables = {"city_overview": overview, "expansion_preference": user_request}
    last_error: Exception | None = None
    for _attempt in range(1, retries + 2):
        text = providers.chat("expansion", variables, images=[city_render])
        try:
            data = extract_json(text)
            if not isinstance(data, dict) or "block_name" not in data:
                raise ExpansionInferenceError("response lacks 'block_name'")
            description = str(data.get("block_description", "")).strip()
            if not description:
                raise ExpansionInferenceError("response lacks 'block_description'")
            edges: dict[str, Relation] = {}
            for zone, token in dict(data.get("spatial_relations", {})).items():
                relation = _normalize_relation_token(str(token))
                ids = name_to_ids.get(str(zone)) or (
                    [str(zone)] if str(zone) in layout.districts else None
                )
                if ids is None:
                    raise ExpansionInferenceError(f"unknown district {zone!r}")
                for district_id in ids:
                    edges[district_id] = relation
            return SceneGraph(
                new_block_name=str(data["block_name"]),
                new_description=description,
                edges=edges,
            )
        except CityForgeError as exc:
            last_error = exc
    raise ExpansionInferenceError(f"expansion inference failed: {last_error}")


def enumerate_candidates(layout: CityLayout) -> CandidateSet:
    """Empty cells 4-adjacent to the occupied region (the BFS depth-1
    frontier), in deterministic (row, col) order."""
    if not layout.cells:
        raise ValueError("layout has no occupied cells")
    frontier: set[GridCoord] = set()
    for cell in layout.cells:
        for dr, dc in _NEIGHBOR_OFFSETS:
            neighbor = cell.shifted(dr, dc)
            if neighbor not in layout.cells:
                frontier.add(neighbor)
    return CandidateSet(cells=tuple(sorted(frontier)))


def distance_term(
    x: GridCoord,
    layout: CityLayout,
    graph: SceneGraph,
    weights: Mapping[Relation, float] = RELATION_WEIGHTS,
    normalize_by_district_size: bool = False,
) -> float:
    """Signed, relation-weighted sum of Euclidean distances to every occupied
    cell. Cells inherit the relation of their district.

    ``normalize_by_district_size`` divides each cell's contribution by its
    district's cell count; off by default.
    """
    if x in layout.cells:
        raise OccupiedError(f"candidate {x} is occupied")
    sizes: dict[str, int] = {}
    if normalize_by_district_size:
        for district_id in layout.districts:
            sizes[district_id] = max(1, len(layout.district_cells(district_id)))
    total = 0.0
    for cell, district_id in layout.cells.items():
        gamma = weights[graph.relation_of(district_id)]
        if gamma == 0.0:
            continue
        if normalize_by_district_size:
            gamma /= sizes.get(district_id, 1)
        total += gamma * math.hypot(x.row - cell.row, x.col - cell.col)
    return total


def semantic_term(
    x: GridCoord,
    d_new: str,
    layout: CityLayout,
    descriptions: Mapping[int, GridDescription],
    providers: ProviderSet,
    cache: dict[str, EmbeddingVector] | None = None,
) -> float:
    """Negated sum of embedding cosines between the new description and the
    descriptions of the candidate's occupied 4-neighbors."""
    if x in layout.cells:
        raise OccupiedError(f"candidate {x} is occupied")
    cache = cache if cache is not None else {}

    def embedding(text: str) -> EmbeddingVector:
        if text not in cache:
            vector = providers.embed(text)
            if vector.norm() == 0.0:
                raise EmbeddingError(f"zero-norm embedding for {text[:60]!r}")
            cache[text] = vector
        return cache[text]

    new_vector = embedding(d_new)
    total = 0.0
    for dr, dc in _NEIGHBOR_OFFSETS:
        neighbor = x.shifted(dr, dc)
        if neighbor in layout.cells:
            text = descriptions[index_of(neighbor, layout.cols)].text
            total += cosine(new_vector, embedding(text))
    return -total


def select_location(
    layout: CityLayout,
    descriptions: Mapping[int, GridDescription],
    graph: SceneGraph,
    providers: ProviderSet,
    lam: float = DEFAULT_LAMBDA,
    weights: Mapping[Relation, float] = RELATION_WEIGHTS,
    candidates: Sequence[GridCoord] | None = None,
    normalize_by_district_size: bool = False,
) -> tuple[GridCoord, list[ObjectiveBreakdown]]:
    """Minimize the combined objective over the candidate set.

    Ties within 1e-9 break toward the lexicographically smallest (row, col).
    An explicit ``candidates`` sequence restricts the feasible set; by default
    the full frontier is used.
    """
    pool: Iterable[GridCoord]
    if candidates is None:
        pool = enumerate_candidates(layout).cells
    else:
        pool = sorted(candidates)
    cache: dict[str, EmbeddingVector] = {}
    breakdowns: list[ObjectiveBreakdown] = []
    best: ObjectiveBreakdown | None = None
    for candidate in pool:
        l_dist = distance_term(
            candidate, layout, graph, weights, normalize_by_district_size
        )
        l_sem = semantic_term(
            candidate, graph.new_description, layout, descriptions, providers, cache
        )
        breakdown = ObjectiveBreakdown(
            candidate=candidate, l_dist=l_dist, l_sem=l_sem, total=l_dist + lam * l_sem
        )
        breakdowns.append(breakdown)
        if best is None or breakdown.total < best.total - _TIE_EPS:
            best = breakdown
    if best is None:
        raise NoCandidateError("candidate set is empty")
    return best.candidate, breakdowns


def apply_record_to_layout(
    layout: CityLayout,
    chosen: GridCoord,
    district_id: str,
    name: str,
    description: str,
) -> tuple[CityLayout, tuple[int, int]]:
    """Add a one-cell district at ``chosen`` and re-originate coordinates.

    Returns the new layout and the (dr, dc) translation that was applied.
    """
    if chosen in layout.cells:
        raise OccupiedError(f"cell {chosen} is already occupied")
    translation = (max(0, -chosen.row), max(0, -chosen.col))
    dr, dc = translation
    cells = {cell.shifted(dr, dc): d for cell, d in layout.cells.items()}
    cells[chosen.shifted(dr, dc)] = district_id
    rows = max(c.row for c in cells) + 1
    cols = max(c.col for c in cells) + 1
    districts: dict[str, DistrictBlueprint] = {}
    for old in layout.districts.values():
        districts[old.district_id] = DistrictBlueprint(
            district_id=old.district_id,
            name=old.name,
            description=old.description,
            grid_indices=[],
        )
    districts[district_id] = DistrictBlueprint(
        district_id=district_id, name=name, description=description, grid_indices=[]
    )
    for cell, owner in cells.items():
        districts[owner].grid_indices.append(index_of(cell, cols))
    for blueprint in districts.values():
        blueprint.grid_indices.sort()
    return CityLayout(rows=rows, cols=cols, cells=cells, districts=districts), translation


def index_remap(
    old_layout: CityLayout, translation: tuple[int, int], new_cols: int
) -> dict[int, int]:
    """Old tile index -> new tile index across one expansion's re-origin."""
    dr, dc = translation
    return {
        index_of(cell, old_layout.cols): index_of(cell.shifted(dr, dc), new_cols)
        for cell in old_layout.cells
    }


def apply_expansion(
    project: CityProject,
    graph: SceneGraph,
    chosen: GridCoord,
    breakdowns: Sequence[ObjectiveBreakdown] = (),
    request: str = "",
) -> CityProject:
    """Commit the selected expansion: grow the layout, re-key index-addressed
    maps across the re-origin, and append the replayable history record."""
    district_id = unique_district_id(graph.new_block_name, project.layout.districts)
    new_layout, translation = apply_record_to_layout(
        project.layout, chosen, district_id, graph.new_block_name, graph.new_description
    )
    remap = index_remap(project.layout, translation, new_layout.cols)
    descriptions: dict[int, GridDescription] = {}
    for old_index, desc in project.descriptions.items():
        new_index = remap.get(old_index)
        if new_index is not None:
            descriptions[new_index] = GridDescription(index=new_index, text=desc.text)
    assets: dict[int, AssetRef] = {}
    for old_index, ref in project.assets.items():
        new_index = remap.get(old_index)
        if new_index is not None:
            assets[new_index] = ref
    dr, dc = translation
    new_cell = chosen.shifted(dr, dc)
    new_index = index_of(new_cell, new_layout.cols)
    descriptions[new_index] = GridDescription(index=new_index, text=graph.new_description)
    record = ExpansionRecord(
        request=request,
        scene_graph=graph.to_dict(),
        candidates=[b.to_dict() for b in breakdowns],
        chosen=chosen,
        translation=translation,
        district_id=district_id,
    )
    return CityProject(
        id=project.id,
        prompt=project.prompt,
        layout=new_layout,
        initial_layout=project.initial_layout,
        descriptions=descriptions,
        assets=assets,
        history=[*project.history, record],
    )


def replay_history(
    initial: CityLayout, records: Iterable[ExpansionRecord]
) -> CityLayout:
    """Re-apply expansion records from the initial layout; used to verify that
    the stored current layout matches its history."""
    layout = initial
    for record in records:
        graph = SceneGraph.from_dict(record.scene_graph)
        layout, translation = apply_record_to_layout(
            layout,
            record.chosen,
            record.district_id,
            graph.new_block_name,
            graph.new_description,
        )
        if translation != record.translation:
            raise CityForgeError(
                f"replay diverged: translation {translation} != {record.translation}"
            )
    return layout


def new_tile_index(record: ExpansionRecord, layout_after: CityLayout) -> int:
    """Tile index of the cell a record added, in the post-expansion layout."""
    dr, dc = record.translation
    return index_of(record.chosen.shifted(dr, dc), layout_after.cols)
