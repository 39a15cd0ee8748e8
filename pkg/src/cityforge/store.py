"""On-disk project store.

Layout under the project root:

    city.json            project identity, prompt, initial + current layout, assets
    descriptions.json    per-tile design texts, keyed by 1-based index
    history.jsonl        append-only expansion records
    corpus.jsonl         optional reference corpus (one doc per line)
    tiles/<index>/       loop artifacts: iter<k>/{produced.png,refined.png,verdict.txt},
                         final.png, model.glb, meta.json
    scene.manifest.json  assembled scene

Every write goes through a temp file plus rename, so a killed process never
leaves a half-written file and the store always reloads into a consistent
project.
"""

from __future__ import annotations

import json
import os
import shutil
from pathlib import Path
from typing import Any, Iterable

from .jsonio import canonical_json
from .model import (
    AssetRef,
    CityProject,
    ExpansionRecord,
    GridDescription,
    layout_from_dict,
    layout_to_dict,
)
from .planner import CorpusDoc
from .providers import MeshAsset

PROJECT_SCHEMA = 1


class ProjectStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # --- paths ---------------------------------------------------------

    @property
    def city_path(self) -> Path:
        return self.root / "city.json"

    @property
    def descriptions_path(self) -> Path:
        return self.root / "descriptions.json"

    @property
    def history_path(self) -> Path:
        return self.root / "history.jsonl"

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    @property
    def manifest_path(self) -> Path:
        return self.root / "scene.manifest.json"

    def tile_dir(self, index: int) -> Path:
        return self.root / "tiles" / str(index)

    def exists(self) -> bool:
        return self.city_path.is_file()

    # --- atomic IO -----------------------------------------------------

    def _write_atomic(self, path: Path, data: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def _write_text(self, path: Path, text: str) -> None:
        self._write_atomic(path, text.encode("utf-8"))

    # --- project -------------------------------------------------------

    def save_project(self, project: CityProject) -> None:
        city = {
            "schema": PROJECT_SCHEMA,
            "id": project.id,
            "prompt": project.prompt,
            "initial_layout": layout_to_dict(project.initial_layout),
            "layout": layout_to_dict(project.layout),
            "assets": {
                str(i): {
                    "bbox": [float(v) for v in ref.bbox],
                    "format": ref.fmt,
                    "below_threshold": ref.below_threshold,
                }
                for i, ref in sorted(project.assets.items())
            },
        }
        self._write_text(self.city_path, canonical_json(city))
        descriptions = {str(i): d.text for i, d in sorted(project.descriptions.items())}
        self._write_text(self.descriptions_path, canonical_json(descriptions))

    def load_project(self) -> CityProject:
        with open(self.city_path, encoding="utf-8") as fh:
            city = json.load(fh)
        descriptions: dict[int, GridDescription] = {}
        if self.descriptions_path.is_file():
            with open(self.descriptions_path, encoding="utf-8") as fh:
                for key, text in json.load(fh).items():
                    descriptions[int(key)] = GridDescription(index=int(key), text=text)
        assets = {
            int(key): AssetRef(
                bbox=tuple(info["bbox"]),
                fmt=info.get("format", "glb"),
                below_threshold=bool(info.get("below_threshold", False)),
            )
            for key, info in city.get("assets", {}).items()
        }
        return CityProject(
            id=city["id"],
            prompt=city["prompt"],
            layout=layout_from_dict(city["layout"]),
            initial_layout=layout_from_dict(city["initial_layout"]),
            descriptions=descriptions,
            assets=assets,
            history=self.read_history(),
        )

    # --- history -------------------------------------------------------

    def append_history(self, record: ExpansionRecord) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.history_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    def read_history(self) -> list[ExpansionRecord]:
        if not self.history_path.is_file():
            return []
        records = []
        with open(self.history_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(ExpansionRecord.from_dict(json.loads(line)))
        return records

    # --- corpus --------------------------------------------------------

    def load_corpus(self) -> list[CorpusDoc]:
        if not self.corpus_path.is_file():
            return []
        docs = []
        with open(self.corpus_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    data = json.loads(line)
                    docs.append(
                        CorpusDoc(
                            id=str(data["id"]),
                            title=str(data.get("title", "")),
                            body=str(data["body"]),
                        )
                    )
        return docs

    def save_corpus(self, docs: Iterable[CorpusDoc]) -> None:
        lines = [
            json.dumps({"id": d.id, "title": d.title, "body": d.body}, sort_keys=True)
            for d in docs
        ]
        self._write_text(self.corpus_path, "\n".join(lines) + "\n")

    # --- tile artifacts --------------------------------------------------

    def write_iteration(
        self, index: int, iteration: int, produced: bytes, refined: bytes, verdict_text: str
    ) -> None:
        directory = self.tile_dir(index) / f"iter{iteration}"
        self._write_atomic(directory / "produced.png", produced)
        self._write_atomic(directory / "refined.png", refined)
        self._write_text(directory / "verdict.txt", verdict_text)

    def write_final(self, index: int, image: bytes, mesh: MeshAsset) -> None:
        directory = self.tile_dir(index)
        self._write_atomic(directory / "final.png", image)
        self._write_atomic(directory / f"model.{mesh.fmt}", mesh.data)

    def write_tile_meta(self, index: int, meta: dict[str, Any]) -> None:
        self._write_text(self.tile_dir(index) / "meta.json", canonical_json(meta))

    def read_tile_meta(self, index: int) -> dict[str, Any] | None:
        path = self.tile_dir(index) / "meta.json"
        if not path.is_file():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def tile_complete(self, index: int) -> bool:
        directory = self.tile_dir(index)
        return (
            (directory / "final.png").is_file()
            and any(directory.glob("model.*"))
            and (directory / "meta.json").is_file()
        )

    def read_tile_image(self, index: int) -> bytes | None:
        path = self.tile_dir(index) / "final.png"
        return path.read_bytes() if path.is_file() else None

    def remap_tiles(self, mapping: dict[int, int]) -> None:
        """Rename tile directories after an expansion changed the indexing.

        Two phases (old -> staging -> new) so overlapping old/new index sets
        cannot collide mid-move.
        """
        tiles = self.root / "tiles"
        if not tiles.is_dir():
            return
        staged: list[tuple[Path, Path]] = []
        for old_index, new_index in sorted(mapping.items()):
            src = tiles / str(old_index)
            if old_index != new_index and src.is_dir():
                stage = tiles / f".remap-{new_index}"
                shutil.move(str(src), str(stage))
                staged.append((stage, tiles / str(new_index)))
        for stage, dst in staged:
            if dst.exists():
                shutil.rmtree(dst)
            shutil.move(str(stage), str(dst))

    def write_manifest(self, text: str) -> None:
        self._write_text(self.manifest_path, text)

    def read_manifest(self) -> dict[str, Any] | None:
        if not self.manifest_path.is_file():
            return None
        with open(self.manifest_path, encoding="utf-8") as fh:
            return json.load(fh)
