"""Core data model: the hierarchical City-District-Grid structure.

External grid indices are 1-based row-major (the planner's output contract);
internal coordinates are 0-based (row, col). The coordinate plane is unbounded
during expansion; stored layouts are re-originated so occupied cells are
non-negative.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import CoverageError, OverlapError, ParseError

_GRID_SIZE_RE = re.compile(r"^\s*(\d+)\s*[x×X]\s*(\d+)\s*$")
_SLUG_RE = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True, order=True)
class GridCoord:
    """A tile position in (row, col) order, in tile units."""

    row: int
    col: int

    def __iter__(self):
        return iter((self.row, self.col))

    def shifted(self, dr: int, dc: int) -> "GridCoord":
        return GridCoord(self.row + dr, self.col + dc)


@dataclass
class DistrictBlueprint:
    """A named functional district and the 1-based grid indices it occupies."""

    district_id: str
    name: str
    description: str
    grid_indices: list[int]


@dataclass
class GridDescription:
    """Per-tile design text driving image generation."""

    index: int
    text: str


@dataclass(frozen=True)
class AssetRef:
    """Reference to a finished tile asset; the file path is derived from the
    tile index by the store (``tiles/<index>/model.glb``)."""

    bbox: tuple[float, float, float]
    fmt: str = "glb"
    below_threshold: bool = False


@dataclass
class CityLayout:
    """Occupancy grid: which cells exist and which district owns each.

    ``rows``/``cols`` are the bounding extent; after expansions the occupied
    set need not fill the whole rectangle.
    """

    rows: int
    cols: int
    cells: dict[GridCoord, str]
    districts: dict[str, DistrictBlueprint]

    def occupied(self) -> list[GridCoord]:
        return sorted(self.cells)

    def district_cells(self, district_id: str) -> list[GridCoord]:
        return sorted(c for c, d in self.cells.items() if d == district_id)


@dataclass
class ExpansionRecord:
    """One expansion step, sufficient to replay the layout change.

    ``chosen`` is the selected cell in the coordinates of the layout *before*
    the re-origin shift; ``translation`` is the (dr, dc) shift that was then
    applied to every cell.
    """

    request: str
    scene_graph: dict[str, Any]
    candidates: list[dict[str, Any]]
    chosen: GridCoord
    translation: tuple[int, int]
    district_id: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "request": self.request,
            "scene_graph": self.scene_graph,
            "candidates": self.candidates,
            "chosen": [self.chosen.row, self.chosen.col],
            "translation": list(self.translation),
            "district_id": self.district_id,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExpansionRecord":
        return cls(
            request=data["request"],
            scene_graph=dict(data["scene_graph"]),
            candidates=list(data.get("candidates", [])),
            chosen=GridCoord(*data["chosen"]),
            translation=tuple(data["translation"]),
            district_id=data["district_id"],
        )


@dataclass
class CityProject:
    """The evolving city: prompt, current and initial layout, per-tile texts
    and assets, and the append-only expansion history."""

    id: str
    prompt: str
    layout: CityLayout
    initial_layout: CityLayout
    descriptions: dict[int, GridDescription] = field(default_factory=dict)
    assets: dict[int, AssetRef] = field(default_factory=dict)
    history: list[ExpansionRecord] = field(default_factory=list)


def index_of(coord: GridCoord, cols: int) -> int:
    """1-based row-major index of ``coord`` on a grid with ``cols`` columns."""
    if coord.row < 0 or coord.col < 0:
        raise IndexError(f"negative coordinate {coord}")
    if coord.col >= cols:
        raise IndexError(f"column {coord.col} out of range for {cols} columns")
    return coord.row * cols + coord.col + 1


def coord_of(index: int, cols: int) -> GridCoord:
    """Inverse of :func:`index_of`."""
    if index < 1:
        raise IndexError(f"grid index {index} < 1")
    row, col = divmod(index - 1, cols)
    return GridCoord(row, col)


def parse_grid_size(text: str) -> tuple[int, int]:
    """Parse a "rows x cols" string; accepts ``x``, ``X`` and ``×`` separators."""
    match = _GRID_SIZE_RE.match(text)
    if not match:
        raise ParseError(f"malformed grid size {text!r}")
    rows, cols = int(match.group(1)), int(match.group(2))
    if rows < 1 or cols < 1:
        raise ParseError(f"grid size must be at least 1x1, got {text!r}")
    return rows, cols


def slugify(name: str) -> str:
    slug = _SLUG_RE.sub("-", name.lower()).strip("-")
    return slug or "district"


def unique_district_id(name: str, taken: Iterable[str]) -> str:
    """Slug of ``name``, with a numeric suffix on collision."""
    taken = set(taken)
    base = slugify(name)
    if base not in taken:
        return base
    n = 2
    while f"{base}-{n}" in taken:
        n += 1
    return f"{base}-{n}"


def _is_contiguous(coords: list[GridCoord]) -> bool:
    if not coords:
        return False
    seen = {coords[0]}
    stack = [coords[0]]
    pool = set(coords)
    while stack:
        cur = stack.pop()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = cur.shifted(dr, dc)
            if nxt in pool and nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(pool)


def validate_layout(plan: Mapping[str, Any]) -> CityLayout:
    """Validate a planner output JSON and build the layout.

    The plan must carry "Grid Size" and "Areas" (name -> {"Description",
    "Grid Index"}); every index in [1, rows*cols] must be claimed by exactly
    one area. Non-contiguous areas are accepted with a warning.
    """
    if "Grid Size" not in plan:
        raise ParseError("plan has no 'Grid Size' field")
    if not isinstance(plan.get("Areas"), Mapping) or not plan["Areas"]:
        raise ParseError("plan has no 'Areas' mapping")
    rows, cols = parse_grid_size(str(plan["Grid Size"]))
    total = rows * cols

    districts: dict[str, DistrictBlueprint] = {}
    claimed: dict[int, str] = {}
    for name, area in plan["Areas"].items():
        if not isinstance(area, Mapping) or "Grid Index" not in area:
            raise ParseError(f"area {name!r} has no 'Grid Index' list")
        raw_indices = area["Grid Index"]
        if not isinstance(raw_indices, (list, tuple)) or not raw_indices:
            raise ParseError(f"area {name!r} has an empty or non-list 'Grid Index'")
        district_id = unique_district_id(str(name), districts)
        indices: list[int] = []
        for raw in raw_indices:
            idx = int(raw)
            if idx < 1 or idx > total:
                raise IndexError(
                    f"grid index {idx} of area {name!r} outside [1, {total}]"
                )
            if idx in claimed:
                raise OverlapError(idx, (claimed[idx], district_id))
            if idx in indices:
                raise OverlapError(idx, (district_id,))
            claimed[idx] = district_id
            indices.append(idx)
        districts[district_id] = DistrictBlueprint(
            district_id=district_id,
            name=str(name),
            description=str(area.get("Description", "")),
            grid_indices=sorted(indices),
        )

    uncovered = tuple(i for i in range(1, total + 1) if i not in claimed)
    if uncovered:
        raise CoverageError(uncovered)

    cells = {coord_of(i, cols): d for i, d in claimed.items()}
    layout = CityLayout(rows=rows, cols=cols, cells=cells, districts=districts)
    for district in districts.values():
        if not _is_contiguous(layout.district_cells(district.district_id)):
            warnings.warn(
                f"district {district.district_id!r} occupies non-contiguous cells",
                stacklevel=2,
            )
    return layout


def district_of(layout: CityLayout, coord: GridCoord) -> str | None:
    """District id owning ``coord``, or None for an empty cell."""
    return layout.cells.get(coord)


# --- serialization -----------------------------------------------------------


def layout_to_dict(layout: CityLayout) -> dict[str, Any]:
    return {
        "rows": layout.rows,
        "cols": layout.cols,
        "cells": [[c.row, c.col, d] for c, d in sorted(layout.cells.items())],
        "districts": {
            d.district_id: {
                "name": d.name,
                "description": d.description,
                "grid_indices": list(d.grid_indices),
            }
            for d in layout.districts.values()
        },
    }


def layout_from_dict(data: Mapping[str, Any]) -> CityLayout:
    districts = {
        did: DistrictBlueprint(
            district_id=did,
            name=info["name"],
            description=info.get("description", ""),
            grid_indices=list(info.get("grid_indices", [])),
        )
        for did, info in data["districts"].items()
    }
    cells = {GridCoord(r, c): d for r, c, d in data["cells"]}
    return CityLayout(
        rows=int(data["rows"]), cols=int(data["cols"]), cells=cells, districts=districts
    )
