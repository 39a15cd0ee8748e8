"""Provider interfaces, retry policy, and the uniform call facade.

Every external model service (chat/vision-chat, image generation, image
editing, image-to-3D, embedding) sits behind a small backend protocol; the
:class:`ProviderSet` facade renders the prompt template, applies the retry
policy, enforces the per-provider concurrency cap, and records call stats.
"""

from __future__ import annotations

import math
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from ..errors import EmbeddingError, ProviderError, TransientProviderError
from .templates import TemplateLibrary


@dataclass(frozen=True)
class ProviderConfig:
    """Connection and retry settings for one provider endpoint."""

    endpoint: str = ""
    credential_env: str = ""
    timeout: float = 60.0
    max_retries: int = 2
    backoff_base: float = 0.5
    concurrency: int = 2

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-length real vector for a text."""

    values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.values))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; raises :class:`EmbeddingError` on zero-norm input."""
    if a.dim != b.dim:
        raise EmbeddingError(f"dimension mismatch {a.dim} != {b.dim}")
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        raise EmbeddingError("zero-norm embedding")
    dot = math.fsum(x * y for x, y in zip(a.values, b.values))
    return dot / (na * nb)


@dataclass(frozen=True)
class MeshAsset:
    """Binary mesh plus the bounding-box extents needed for assembly scaling."""

    data: bytes
    bbox: tuple[float, float, float]
    fmt: str = "glb"


class ChatBackend(Protocol):
    def complete(
        self,
        template_id: str,
        prompt: str,
        variables: Mapping[str, str],
        images: Sequence[bytes],
    ) -> str: ...


class ImageGenBackend(Protocol):
    def generate(self, template_id: str, prompt: str, variables: Mapping[str, str]) -> bytes: ...


class ImageEditBackend(Protocol):
    def edit(
        self, template_id: str, prompt: str, variables: Mapping[str, str], image: bytes
    ) -> bytes: ...


class MeshBackend(Protocol):
    def to_mesh(self, image: bytes) -> MeshAsset: ...


class EmbedBackend(Protocol):
    def embed(self, text: str) -> EmbeddingVector: ...


@dataclass
class CallStats:
    """Thread-safe counters over provider calls."""

    calls: Counter = field(default_factory=Counter)
    last_attempts: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, op: str, template_id: str | None, attempts: int) -> None:
        with self._lock:
            self.calls[(op, template_id)] += 1
            self.last_attempts = attempts

    def count(self, op: str, template_id: str | None = None) -> int:
        with self._lock:
            if template_id is not None:
                return self.calls[(op, template_id)]
            return sum(n for (o, _), n in self.calls.items() if o == op)


class ProviderSet:
    """Uniform entry point for all model calls used by the pipeline."""

    def __init__(
        self,
        chat_backend: ChatBackend,
        image_backend: ImageGenBackend,
        edit_backend: ImageEditBackend,
        mesh_backend: MeshBackend,
        embed_backend: EmbedBackend,
        templates: TemplateLibrary | None = None,
        config: ProviderConfig | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._chat = chat_backend
        self._image = image_backend
        self._edit = edit_backend
        self._mesh = mesh_backend
        self._embed = embed_backend
        self.templates = templates or TemplateLibrary()
        self.config = config or ProviderConfig()
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(max(1, self.config.concurrency))
        self.stats = CallStats()

    def _call(self, op: str, template_id: str | None, fn: Callable[[], object]):
        attempts = 0
        while True:
            attempts += 1
            try:
                with self._gate:
                    result = fn()
            except TransientProviderError as exc:
                if attempts > self.config.max_retries:
                    self.stats.record(op, template_id, attempts)
                    raise ProviderError(
                        f"{op} failed after {attempts} attempts: {exc}"
                    ) from exc
                self._sleep(self.config.backoff_base * 2 ** (attempts - 1))
                continue
            self.stats.record(op, template_id, attempts)
            return result

    def chat(
        self,
        template_id: str,
        variables: Mapping[str, str],
        images: Sequence[bytes] = (),
    ) -> str:
        prompt = self.templates.render(template_id, variables)
        return self._call(
            "chat", template_id, lambda: self._chat.complete(template_id, prompt, variables, images)
        )

    def generate_image(self, template_id: str, variables: Mapping[str, str]) -> bytes:
        prompt = self.templates.render(template_id, variables)
        return self._call(
            "generate_image", template_id, lambda: self._image.generate(template_id, prompt, variables)
        )

    def edit_image(self, template_id: str, variables: Mapping[str, str], image: bytes) -> bytes:
        prompt = self.templates.render(template_id, variables)
        return self._call(
            "edit_image", template_id, lambda: self._edit.edit(template_id, prompt, variables, image)
        )

    def image_to_mesh(self, image: bytes) -> MeshAsset:
        return self._call("image_to_mesh", None, lambda: self._mesh.to_mesh(image))

    def embed(self, text: str) -> EmbeddingVector:
        return self._call("embed", None, lambda: self._embed.embed(text))


def load_script_dir(path: Path) -> dict[str, list[str]]:
    """Load scripted mock responses: one subdirectory per template id holding
    ordered response files."""
    script: dict[str, list[str]] = {}
    for sub in sorted(p for p in Path(path).iterdir() if p.is_dir()):
        script[sub.name] = [
            f.read_text(encoding="utf-8") for f in sorted(sub.iterdir()) if f.is_file()
        ]
    return script
