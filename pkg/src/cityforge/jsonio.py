"""JSON helpers: fence-tolerant extraction of model output and canonical
serialization for byte-stable artifacts."""

from __future__ import annotations

import json
import re
from typing import Any

from .errors import ParseError

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json(text: str) -> Any:
    """Parse the JSON object in a model response.

    Tolerates markdown code fences and prose around the object: falls back to
    the substring between the first "{" and the last "}".
    """
    candidates = [text.strip()]
    fenced = _FENCE_RE.search(text)
    if fenced:
        candidates.insert(0, fenced.group(1).strip())
    start, end = text.find("{"), text.rfind("}")
    if start != -1 and end > start:
        candidates.append(text[start : end + 1])
    last_error: Exception | None = None
    for candidate in candidates:
        try:
            return json.loads(candidate)
        except json.JSONDecodeError as exc:
            last_error = exc
    raise ParseError(f"no JSON object found in response: {last_error}")


def canonical_json(value: Any) -> str:
    """Serialize with sorted keys and floats fixed at 6 fractional digits.

    Deterministic byte-for-byte for equal inputs, which is what the manifest
    and project files are compared on.
    """
    return _write(value, 0) + "\n"


def _write(value: Any, depth: int) -> str:
    pad = "  " * depth
    inner = "  " * (depth + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON requires string keys, got {key!r}")
            items.append(f"{inner}{json.dumps(key)}: {_write(value[key], depth + 1)}")
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner}{_write(v, depth + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot canonicalize {type(value).__name__}")
