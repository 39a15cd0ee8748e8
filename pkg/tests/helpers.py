"""Shared fixtures-as-functions for the test suite."""

from __future__ import annotations

import math

from cityforge.model import (
    CityLayout,
    DistrictBlueprint,
    GridCoord,
    GridDescription,
    index_of,
)

# The planning template's own output example: a 1x3 city with two areas.
EXAMPLE_PLAN_1X3 = {
    "Grid Size": "1 X 3",
    "Areas": {
        "Residential District": {
            "Description": (
                "A medium-density housing zone with 4-6 story apartment buildings, "
                "internal courtyards, and narrow streets. Buildings are arranged in "
                "blocks with small plazas and parking areas."
            ),
            "Grid Index": [1, 2],
        },
        "Commercial Center": {
            "Description": (
                "A bustling commercial core with multi-story malls, office towers, "
                "and cafes. The streets are wide and intersect at a central avenue "
                "connecting to nearby residential areas."
            ),
            "Grid Index": [3],
        },
    },
}


def make_layout(
    cell_map: dict[tuple[int, int], str],
    names: dict[str, str] | None = None,
) -> CityLayout:
    """Build a layout straight from a {(row, col): district_id} map."""
    cells = {GridCoord(r, c): d for (r, c), d in cell_map.items()}
    rows = max(r for r, _ in cell_map) + 1
    cols = max(c for _, c in cell_map) + 1
    names = names or {}
    districts = {}
    for district_id in sorted(set(cell_map.values())):
        owned = sorted(
            index_of(GridCoord(r, c), cols)
            for (r, c), owner in cell_map.items()
            if owner == district_id
        )
        districts[district_id] = DistrictBlueprint(
            district_id=district_id,
            name=names.get(district_id, district_id.replace("-", " ").title()),
            description=f"Buildings of {district_id}",
            grid_indices=owned,
        )
    return CityLayout(rows=rows, cols=cols, cells=cells, districts=districts)


def descriptions_for(
    layout: CityLayout, texts: dict[int, str] | None = None
) -> dict[int, GridDescription]:
    """One description per occupied index; default text derives from the index."""
    texts = texts or {}
    out = {}
    for cell in layout.occupied():
        index = index_of(cell, layout.cols)
        out[index] = GridDescription(
            index=index, text=texts.get(index, f"tile {index} buildings")
        )
    return out


def dist(a: tuple[int, int], b: tuple[int, int]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])
