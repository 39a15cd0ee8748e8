"""Reference JSON-over-HTTP clients for live model services.

Each client posts to one endpoint and maps transport failures to
:class:`TransientProviderError` so the facade's retry policy applies.
Credentials come only from the environment variable named in the config.
"""

from __future__ import annotations

import base64
import os
from typing import Any, Mapping, Sequence

import requests

from ..errors import ProviderError, TransientProviderError
from .base import EmbeddingVector, MeshAsset, ProviderConfig

_RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


class _JsonHttpClient:
    def __init__(self, config: ProviderConfig, session: Any | None = None):
        if not config.endpoint:
            raise ValueError("endpoint required for HTTP provider")
        self.config = config
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.credential_env:
            token = os.environ.get(self.config.credential_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def post(self, payload: Mapping[str, Any]) -> dict[str, Any]:
        try:
            response = self._session.post(
                self.config.endpoint,
                json=payload,
                headers=self._headers(),
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise TransientProviderError(f"transport failure: {exc}") from exc
        if response.status_code in _RETRYABLE_STATUS:
            raise TransientProviderError(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise ProviderError(f"HTTP {response.status_code}: {response.text[:200]}")
        return response.json()


class HttpChatClient(_JsonHttpClient):
    def complete(
        self,
        template_id: str,
        prompt: str,
        variables: Mapping[str, str],
        images: Sequence[bytes],
    ) -> str:
        payload: dict[str, Any] = {"template": template_id, "prompt": prompt}
        if images:
            payload["images"] = [base64.b64encode(img).decode("ascii") for img in images]
        return str(self.post(payload)["text"])


class HttpImageGenClient(_JsonHttpClient):
    def generate(self, template_id: str, prompt: str, variables: Mapping[str, str]) -> bytes:
        body = self.post({"template": template_id, "prompt": prompt})
        return base64.b64decode(body["png_b64"])


class HttpImageEditClient(_JsonHttpClient):
    def edit(self, template_id: str, prompt: str, variables: Mapping[str, str], image: bytes) -> bytes:
        body = self.post(
            {
                "template": template_id,
                "prompt": prompt,
                "image_b64": base64.b64encode(image).decode("ascii"),
            }
        )
        return base64.b64decode(body["png_b64"])


class HttpMeshClient(_JsonHttpClient):
    def to_mesh(self, image: bytes) -> MeshAsset:
        body = self.post({"image_b64": base64.b64encode(image).decode("ascii")})
        bbox = tuple(float(v) for v in body["bbox"])
        if len(bbox) != 3:
            raise ProviderError(f"mesh service returned bad bbox {body['bbox']!r}")
        return MeshAsset(
            data=base64.b64decode(body["mesh_b64"]),
            bbox=bbox,  # type: ignore[arg-type]
            fmt=str(body.get("format", "glb")),
        )


class HttpEmbedClient(_JsonHttpClient):
    def embed(self, text: str) -> EmbeddingVector:
        body = self.post({"text": text})
        return EmbeddingVector(tuple(float(v) for v in body["values"]))
