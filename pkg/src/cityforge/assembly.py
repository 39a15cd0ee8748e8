"""Deterministic scene assembly.

Turns a finished project into a scene manifest: per-tile transforms computed
from mesh bounding boxes, a ground slab, road segments in the gutters between
adjacent tiles, and style materials. The manifest is canonical JSON so equal
projects assemble to byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GeometryError, IncompleteCityError, RoadError
from .jsonio import canonical_json
from .model import CityLayout, CityProject, GridCoord, coord_of, index_of

MANIFEST_SCHEMA = 1

DEFAULT_ROAD_RGBA = (0.15, 0.15, 0.15, 1.0)
DEFAULT_GROUND_RGBA = (0.50, 0.50, 0.50, 1.0)
DEFAULT_ROUGHNESS = 0.9


@dataclass(frozen=True)
class Material:
    rgba: tuple[float, float, float, float]
    roughness: float

    def __post_init__(self):
        if len(self.rgba) != 4 or any(not 0.0 <= v <= 1.0 for v in self.rgba):
            raise ValueError(f"rgba components must be in [0, 1]: {self.rgba}")
        if not 0.0 <= self.roughness <= 1.0:
            raise ValueError(f"roughness must be in [0, 1]: {self.roughness}")

    def to_dict(self) -> dict:
        return {"rgba": [float(v) for v in self.rgba], "roughness": float(self.roughness)}


@dataclass(frozen=True)
class StyleConfig:
    road_material: Material = field(
        default_factory=lambda: Material(DEFAULT_ROAD_RGBA, DEFAULT_ROUGHNESS)
    )
    ground_material: Material = field(
        default_factory=lambda: Material(DEFAULT_GROUND_RGBA, DEFAULT_ROUGHNESS)
    )


@dataclass(frozen=True)
class AssemblyConfig:
    tile_size: float = 1.0
    fill_ratio: float = 0.95
    road_width_ratio: float = 0.12


@dataclass(frozen=True)
class TilePlacement:
    index: int
    cell: GridCoord
    asset: str
    translation: tuple[float, float, float]
    uniform_scale: float
    rotation_z: float = 0.0


@dataclass(frozen=True)
class RoadSegment:
    from_cell: GridCoord
    to_cell: GridCoord
    width: float


@dataclass
class SceneManifest:
    tile_size: float
    placements: list[TilePlacement]
    ground: dict
    roads: list[RoadSegment]
    style: StyleConfig

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "tile_size": float(self.tile_size),
            "style": {
                "road_material": self.style.road_material.to_dict(),
                "ground_material": self.style.ground_material.to_dict(),
            },
            "ground": self.ground,
            "roads": [
                {
                    "from_cell": [s.from_cell.row, s.from_cell.col],
                    "to_cell": [s.to_cell.row, s.to_cell.col],
                    "width": float(s.width),
                    "material": self.style.road_material.to_dict(),
                }
                for s in self.roads
            ],
            "placements": [
                {
                    "index": p.index,
                    "cell": [p.cell.row, p.cell.col],
                    "asset": p.asset,
                    "translation": [float(v) for v in p.translation],
                    "uniform_scale": float(p.uniform_scale),
                    "rotation_z": float(p.rotation_z),
                }
                for p in self.placements
            ],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def compute_transform(
    cell: GridCoord,
    bbox: tuple[float, float, float],
    config: AssemblyConfig = AssemblyConfig(),
    index: int | None = None,
    asset: str = "",
) -> TilePlacement:
    """Uniform scale fitting the footprint into the tile interior, centered on
    the cell center at ground height."""
    dx, dy, dz = bbox
    if dx <= 0 or dy <= 0 or dz <= 0:
        raise GeometryError(f"non-positive bbox extent {bbox}")
    scale = (config.tile_size * config.fill_ratio) / max(dx, dy)
    translation = (
        (cell.col + 0.5) * config.tile_size,
        (cell.row + 0.5) * config.tile_size,
        0.0,
    )
    return TilePlacement(
        index=index if index is not None else 0,
        cell=cell,
        asset=asset,
        translation=translation,
        uniform_scale=scale,
    )


def _adjacent_pairs(layout: CityLayout) -> list[tuple[GridCoord, GridCoord]]:
    pairs = []
    for cell in layout.occupied():
        for dr, dc in ((0, 1), (1, 0)):
            neighbor = cell.shifted(dr, dc)
            if neighbor in layout.cells:
                pairs.append((cell, neighbor))
    return sorted(pairs)


def build_roads(
    layout: CityLayout,
    connections: list[tuple[int, int]] | None = None,
    config: AssemblyConfig = AssemblyConfig(),
) -> list[RoadSegment]:
    """Road segments between 4-adjacent occupied cells.

    By default every adjacent pair gets a segment; an explicit connection list
    (1-based index pairs) replaces the default and is validated for adjacency.
    """
    width = config.road_width_ratio * config.tile_size
    if connections is None:
        return [RoadSegment(a, b, width) for a, b in _adjacent_pairs(layout)]
    segments = []
    for ia, ib in connections:
        a, b = coord_of(ia, layout.cols), coord_of(ib, layout.cols)
        if a not in layout.cells or b not in layout.cells:
            raise RoadError(f"connection ({ia}, {ib}) references an empty cell")
        if abs(a.row - b.row) + abs(a.col - b.col) != 1:
            raise RoadError(f"cells {ia} and {ib} are not 4-adjacent")
        first, second = sorted((a, b))
        segments.append(RoadSegment(first, second, width))
    return sorted(segments, key=lambda s: (s.from_cell, s.to_cell))


def assemble(
    project: CityProject,
    style: StyleConfig = StyleConfig(),
    config: AssemblyConfig = AssemblyConfig(),
    connections: list[tuple[int, int]] | None = None,
) -> SceneManifest:
    """Build the manifest for a fully generated project."""
    layout = project.layout
    missing = tuple(
        index_of(cell, layout.cols)
        for cell in layout.occupied()
        if index_of(cell, layout.cols) not in project.assets
    )
    if missing:
        raise IncompleteCityError(missing)
    placements = []
    for cell in layout.occupied():
        index = index_of(cell, layout.cols)
        ref = project.assets[index]
        placements.append(
            compute_transform(
                cell,
                ref.bbox,
                config,
                index=index,
                asset=f"tiles/{index}/model.{ref.fmt}",
            )
        )
    ground = {
        "origin": [0.0, 0.0],
        "size": [layout.cols * config.tile_size, layout.rows * config.tile_size],
        "material": style.ground_material.to_dict(),
    }
    return SceneManifest(
        tile_size=config.tile_size,
        placements=placements,
        ground=ground,
        roads=build_roads(layout, connections, config),
        style=style,
    )
