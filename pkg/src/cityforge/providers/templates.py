"""Prompt template loading and rendering.

Templates are versioned text files shipped with the package. Placeholders are
``{lower_snake_case}`` tokens; literal braces in JSON examples never match the
placeholder pattern, so no escaping is needed.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..errors import TemplateError

_PLACEHOLDER_RE = re.compile(r"\{([a-z][a-z0-9_]*)\}")


class TemplateLibrary:
    """Loads prompt templates by id and renders them with bound variables."""

    def __init__(self, directory: Path | None = None):
        self._directory = directory
        self._cache: dict[str, str] = {}

    def source(self, template_id: str) -> str:
        if template_id not in self._cache:
            if self._directory is not None:
                path = self._directory / f"{template_id}.txt"
                if not path.is_file():
                    raise TemplateError(f"unknown template {template_id!r}")
                text = path.read_text(encoding="utf-8")
            else:
                ref = resources.files("cityforge") / "templates" / f"{template_id}.txt"
                if not ref.is_file():
                    raise TemplateError(f"unknown template {template_id!r}")
                text = ref.read_text(encoding="utf-8")
            self._cache[template_id] = text
        return self._cache[template_id]

    def placeholders(self, template_id: str) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.source(template_id)))

    def render(self, template_id: str, variables: Mapping[str, str]) -> str:
        text = self.source(template_id)
        unbound = self.placeholders(template_id) - set(variables)
        if unbound:
            raise TemplateError(
                f"template {template_id!r} has unbound placeholders: {sorted(unbound)}"
            )

        def substitute(match: re.Match[str]) -> str:
            return str(variables[match.group(1)])

        return _PLACEHOLDER_RE.sub(substitute, text)
