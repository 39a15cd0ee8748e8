"""Deterministic offline providers.

With a fixed seed every mock is a pure function of its inputs, so the whole
pipeline (plan, design, tile loop, expansion, evaluation) runs without any
model service and produces byte-identical artifacts across runs.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
import struct
from typing import Callable, Mapping, Sequence

from ..errors import ProviderError, TransientProviderError
from ..imaging import hash_color, solid_png
from .base import EmbeddingVector, MeshAsset, ProviderConfig, ProviderSet
from .templates import TemplateLibrary

_SIZE_HINT_RE = re.compile(r"(\d+)\s*[x×X]\s*(\d+)")

_AREA_NAMES = [
    "Residential District",
    "Commercial Center",
    "Civic Plaza",
    "Industrial Zone",
    "Cultural Quarter",
    "Innovation Campus",
]


def _digest(*parts: str | bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8") if isinstance(part, str) else part)
        h.update(b"\x1f")
    return h.digest()


def _short_hash(*parts: str | bytes) -> str:
    return _digest(*parts).hex()[:16]


class DeterministicChatMock:
    """Synthesizes a valid response for every chat template the engine uses."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(
        self,
        template_id: str,
        prompt: str,
        variables: Mapping[str, str],
        images: Sequence[bytes],
    ) -> str:
        handler = getattr(self, f"_{template_id}", None)
        if handler is None:
            return f"OK: {template_id} {_short_hash(str(self.seed), prompt)}"
        return handler(prompt, variables)

    def _global_planner(self, prompt: str, variables: Mapping[str, str]) -> str:
        instruction = variables.get("city_instruction", "")
        hint = _SIZE_HINT_RE.search(instruction)
        rows, cols = (int(hint.group(1)), int(hint.group(2))) if hint else (2, 3)
        total = rows * cols
        if total == 1:
            groups = [[1]]
        elif rows == 1:
            half = max(1, cols // 2)
            groups = [list(range(1, half + 1)), list(range(half + 1, total + 1))]
        else:
            groups = [
                list(range(r * cols + 1, (r + 1) * cols + 1)) for r in range(rows)
            ]
        theme = instruction.strip().splitlines()[0][:100] if instruction.strip() else "a city"
        areas = {}
        for i, indices in enumerate(groups):
            name = _AREA_NAMES[i % len(_AREA_NAMES)]
            areas[name] = {
                "Description": (
                    f"{name} shaped by the instruction: {theme}. Mixed building stock "
                    "with coherent massing and orderly street frontage."
                ),
                "Grid Index": indices,
            }
        return json.dumps({"Grid Size": f"{rows} X {cols}", "Areas": areas}, indent=2)

    def _local_designer(self, prompt: str, variables: Mapping[str, str]) -> str:
        area = json.loads(variables["area_json"])
        name = area.get("Area Name", "Area")
        description = area.get("Description", "")
        out = {
            str(i): (
                f"Grid {i} of {name}: {description} Cluster {i} varies rooflines and "
                "facade rhythm while keeping the shared material palette."
            )
            for i in area.get("Grid Index", [])
        }
        return json.dumps(out, indent=2)

    def _image_evaluate(self, prompt: str, variables: Mapping[str, str]) -> str:
        description = variables.get("grid_description", "")
        return f"Score: 7\nReason: balanced density, platform removed\nRewrite: {description}"

    def _expansion(self, prompt: str, variables: Mapping[str, str]) -> str:
        zones = json.loads(variables["city_overview"])
        names = sorted(zone["name"] for zone in zones)
        preference = variables.get("expansion_preference", "New Block").strip()
        relations: dict[str, str] = {}
        if names:
            relations[names[0]] = "near"
        if len(names) > 1:
            relations[names[1]] = "relatively_near"
        block_name = f"{preference.title()} Block"
        return json.dumps(
            {
                "block_name": block_name,
                "block_description": (
                    f"A new {preference} block with five to six mid-rise buildings "
                    f"arranged around a shared court, echoing the massing of {names[0] if names else 'the city'} "
                    "and keeping a consistent material palette of stone, glass, and brick."
                ),
                "spatial_relations": relations,
            },
            indent=2,
        )

    def _reference_distill(self, prompt: str, variables: Mapping[str, str]) -> str:
        city = variables.get("city", "the reference city")
        docs = variables.get("documents", "")
        count = docs.count("\n---\n") + 1 if docs.strip() else 0
        return (
            f"Structural traits of {city} (from {count} documents): compact orthogonal "
            "core with a dense business spine, residential belts adjoining mixed-use "
            "corridors, industrial uses pushed to the perimeter, and mid-rise to "
            "high-rise massing stepping down toward open public spaces."
        )

    def _eval_judge(self, prompt: str, variables: Mapping[str, str]) -> str:
        digest = _digest(str(self.seed), variables.get("dimension", ""), prompt)
        return "A" if digest[0] % 2 == 0 else "B"

    def _alignment_query(self, prompt: str, variables: Mapping[str, str]) -> str:
        digest = _digest(str(self.seed), prompt)
        return f"{0.5 + digest[0] / 512:.2f}"


class ScriptedChatMock:
    """Replays canned responses per template id, in order.

    Falls back to the deterministic mock (when given) once a queue runs dry;
    without a fallback an exhausted queue is an error, which keeps fixture
    tests honest about how many calls they expect.
    """

    def __init__(
        self,
        script: Mapping[str, list[str]],
        fallback: DeterministicChatMock | None = None,
    ):
        self._queues = {k: list(v) for k, v in script.items()}
        self._fallback = fallback

    def complete(self, template_id, prompt, variables, images) -> str:
        queue = self._queues.get(template_id)
        if queue:
            return queue.pop(0)
        if self._fallback is not None:
            return self._fallback.complete(template_id, prompt, variables, images)
        raise ProviderError(f"script exhausted for template {template_id!r}")


class FlakyBackend:
    """Raises a transient error for the first ``failures`` calls, then delegates."""

    def __init__(self, inner, failures: int):
        self._inner = inner
        self._remaining = failures
        self.calls = 0

    def __getattr__(self, name: str):
        method = getattr(self._inner, name)

        def wrapped(*args, **kwargs):
            self.calls += 1
            if self._remaining > 0:
                self._remaining -= 1
                raise TransientProviderError("injected transient failure")
            return method(*args, **kwargs)

        return wrapped


class DeterministicImageMock:
    """Solid 64x64 PNG whose color and tags derive from the description hash."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def generate(self, template_id: str, prompt: str, variables: Mapping[str, str]) -> bytes:
        description = variables.get("grid_description", prompt)
        tag = _short_hash(str(self.seed), description)
        return solid_png(
            64, 64, hash_color(str(self.seed), "produce", description),
            texts={"desc": tag, "kind": "produced"},
        )


class DeterministicEditMock:
    def __init__(self, seed: int = 0):
        self.seed = seed

    def edit(self, template_id: str, prompt: str, variables: Mapping[str, str], image: bytes) -> bytes:
        return solid_png(
            64, 64, hash_color(str(self.seed), "refine", image),
            texts={"kind": "refined", "src": _short_hash(image)},
        )


def unit_cube_glb() -> bytes:
    """A minimal valid glTF binary holding a unit cube centered at the origin."""
    verts = [
        (-0.5, -0.5, -0.5), (0.5, -0.5, -0.5), (0.5, 0.5, -0.5), (-0.5, 0.5, -0.5),
        (-0.5, -0.5, 0.5), (0.5, -0.5, 0.5), (0.5, 0.5, 0.5), (-0.5, 0.5, 0.5),
    ]
    tris = [
        0, 2, 1, 0, 3, 2, 4, 5, 6, 4, 6, 7, 0, 1, 5, 0, 5, 4,
        1, 2, 6, 1, 6, 5, 2, 3, 7, 2, 7, 6, 3, 0, 4, 3, 4, 7,
    ]
    positions = b"".join(struct.pack("<fff", *v) for v in verts)
    indices = b"".join(struct.pack("<H", i) for i in tris)
    blob = positions + indices
    gltf = {
        "asset": {"version": "2.0"},
        "buffers": [{"byteLength": len(blob)}],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": len(positions), "target": 34962},
            {"buffer": 0, "byteOffset": len(positions), "byteLength": len(indices), "target": 34963},
        ],
        "accessors": [
            {
                "bufferView": 0, "componentType": 5126, "count": 8, "type": "VEC3",
                "min": [-0.5, -0.5, -0.5], "max": [0.5, 0.5, 0.5],
            },
            {"bufferView": 1, "componentType": 5123, "count": 36, "type": "SCALAR"},
        ],
        "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "indices": 1}]}],
        "nodes": [{"mesh": 0}],
        "scenes": [{"nodes": [0]}],
        "scene": 0,
    }
    payload = json.dumps(gltf, sort_keys=True, separators=(",", ":")).encode()
    payload += b" " * (-len(payload) % 4)
    blob += b"\x00" * (-len(blob) % 4)
    total = 12 + 8 + len(payload) + 8 + len(blob)
    return b"".join(
        [
            struct.pack("<4sII", b"glTF", 2, total),
            struct.pack("<I4s", len(payload), b"JSON"),
            payload,
            struct.pack("<I4s", len(blob), b"BIN\x00"),
            blob,
        ]
    )


class UnitCubeMeshMock:
    def to_mesh(self, image: bytes) -> MeshAsset:
        return MeshAsset(data=unit_cube_glb(), bbox=(1.0, 1.0, 1.0), fmt="glb")


class HashEmbedMock:
    """Seeded hash embedding: deterministic, unit-norm, 64-dimensional."""

    def __init__(self, seed: int = 0, dim: int = 64):
        self.seed = seed
        self.dim = dim

    def embed(self, text: str) -> EmbeddingVector:
        rng = random.Random(int.from_bytes(_digest(str(self.seed), text)[:8], "big"))
        values = [2.0 * rng.random() - 1.0 for _ in range(self.dim)]
        norm = sum(v * v for v in values) ** 0.5
        if norm == 0.0:
            values[0] = 1.0
            norm = 1.0
        return EmbeddingVector(tuple(v / norm for v in values))


class ConstantEmbedMock:
    """Every text maps to the same vector; cosine is 1 everywhere."""

    def __init__(self, dim: int = 8):
        self.dim = dim

    def embed(self, text: str) -> EmbeddingVector:
        return EmbeddingVector(tuple(1.0 for _ in range(self.dim)))


class OrthogonalEmbedMock:
    """Each distinct text gets its own basis vector; cosine is 0 across texts."""

    def __init__(self, dim: int = 32):
        self.dim = dim
        self._axes: dict[str, int] = {}

    def embed(self, text: str) -> EmbeddingVector:
        axis = self._axes.setdefault(text, len(self._axes))
        if axis >= self.dim:
            raise ValueError("more distinct texts than dimensions")
        values = [0.0] * self.dim
        values[axis] = 1.0
        return EmbeddingVector(tuple(values))


def mock_provider_set(
    seed: int = 0,
    script: Mapping[str, list[str]] | None = None,
    config: ProviderConfig | None = None,
    templates: TemplateLibrary | None = None,
    chat=None,
    image=None,
    edit=None,
    mesh=None,
    embed=None,
    sleep: Callable[[float], None] = lambda _t: None,
) -> ProviderSet:
    """Build a fully offline provider set; any backend can be overridden."""
    base_chat = DeterministicChatMock(seed)
    if chat is None:
        chat = ScriptedChatMock(script, fallback=base_chat) if script else base_chat
    return ProviderSet(
        chat_backend=chat,
        image_backend=image or DeterministicImageMock(seed),
        edit_backend=edit or DeterministicEditMock(seed),
        mesh_backend=mesh or UnitCubeMeshMock(),
        embed_backend=embed or HashEmbedMock(seed),
        templates=templates,
        config=config or ProviderConfig(),
        sleep=sleep,
    )
