"""Global Planner and Local Designer.

Turns the user's city instruction into a validated layout, then refines each
district into per-tile descriptions. Optionally grounds the plan in a local
reference corpus via embedding retrieval plus one distillation chat call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (
    CityForgeError,
    DesignValidationError,
    EmptyCorpusError,
    PlanValidationError,
)
from .jsonio import extract_json
from .model import CityLayout, DistrictBlueprint, GridDescription, validate_layout
from .providers import ProviderSet, cosine


@dataclass
class PlanRequest:
    prompt: str
    forced_size: tuple[int, int] | None = None
    reference_city: str | None = None

    def __post_init__(self):
        if not self.prompt.strip():
            raise ValueError("prompt must be nonempty")


@dataclass
class ReferenceSummary:
    city: str
    traits: str
    source_doc_ids: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class CorpusDoc:
    id: str
    title: str
    body: str


@dataclass
class PlanOutcome:
    """A validated layout plus how many attempts the planner needed."""

    layout: CityLayout
    attempts: int
    raw_plan: dict


def retrieve_reference_summary(
    corpus: list[CorpusDoc],
    city: str,
    providers: ProviderSet,
    k: int = 3,
    max_traits_chars: int = 1200,
) -> ReferenceSummary:
    """Top-k retrieval by embedding cosine, distilled into structural traits.

    Ties in similarity break by doc id ascending so the selection is stable.
    """
    if not corpus:
        raise EmptyCorpusError("reference corpus is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    query = providers.embed(city)
    ranked = sorted(
        corpus,
        key=lambda doc: (-cosine(query, providers.embed(doc.body)), doc.id),
    )
    selected = ranked[:k]
    documents = "\n---\n".join(f"{doc.title}\n{doc.body}" for doc in selected)
    traits = providers.chat(
        "reference_distill", {"city": city, "documents": documents}
    ).strip()
    return ReferenceSummary(
        city=city,
        traits=traits[:max_traits_chars],
        source_doc_ids=[doc.id for doc in selected],
    )


def global_plan(
    request: PlanRequest,
    providers: ProviderSet,
    summary: ReferenceSummary | None = None,
    retries: int = 2,
) -> PlanOutcome:
    """One planning chat call, validated; invalid plans are retried.

    A forced size is stated in the rendered prompt and also overrides the
    returned plan's "Grid Size" before validation, so the caller always gets
    exactly the extent it asked for.
    """
    instruction = request.prompt
    if request.forced_size is not None:
        rows, cols = request.forced_size
        instruction = f"{instruction}\n\nGrid Size (already provided): {rows} X {cols}"
    variables = {
        "city_instruction": instruction,
        "reference_summary": summary.traits if summary else "None",
    }
    last_error: Exception | None = None
    for attempt in range(1, retries + 2):
        text = providers.chat("global_planner", variables)
        try:
            plan = extract_json(text)
            if not isinstance(plan, dict):
                raise PlanValidationError("plan is not a JSON object")
            if request.forced_size is not None:
                rows, cols = request.forced_size
                plan["Grid Size"] = f"{rows} X {cols}"
            layout = validate_layout(plan)
            return PlanOutcome(layout=layout, attempts=attempt, raw_plan=plan)
        except (CityForgeError, IndexError, ValueError) as exc:
            last_error = exc
    raise PlanValidationError(
        f"plan invalid after {retries + 1} attempts: {last_error}", last_error
    )


def local_design(
    layout: CityLayout,
    district: DistrictBlueprint,
    prompt: str,
    providers: ProviderSet,
    retries: int = 2,
) -> dict[int, GridDescription]:
    """One design chat call for a district; keys must equal its grid indices."""
    if district.district_id not in layout.districts:
        raise ValueError(f"district {district.district_id!r} not in layout")
    area_json = json.dumps(
        {
            "Area Name": district.name,
            "Description": district.description,
            "Grid Index": list(district.grid_indices),
        },
        indent=2,
    )
    variables = {"city_instruction": prompt, "area_json": area_json}
    expected = set(district.grid_indices)
    missing: set[int] = set()
    extra: set[int] = set()
    for _attempt in range(1, retries + 2):
        text = providers.chat("local_designer", variables)
        try:
            data = extract_json(text)
        except CityForgeError:
            missing, extra = set(expected), set()
            continue
        if not isinstance(data, dict):
            missing, extra = set(expected), set()
            continue
        try:
            keys = {int(key) for key in data}
        except (TypeError, ValueError):
            missing, extra = set(expected), set()
            continue
        missing = expected - keys
        extra = keys - expected
        empty = {int(k) for k, v in data.items() if not str(v).strip()}
        if not missing and not extra and not empty:
            return {
                int(k): GridDescription(index=int(k), text=str(v)) for k, v in data.items()
            }
        missing |= empty
    raise DesignValidationError(district.district_id, missing, extra)


def design_city(
    layout: CityLayout,
    prompt: str,
    providers: ProviderSet,
    retries: int = 2,
) -> dict[int, GridDescription]:
    """Union of local designs over all districts; covers every occupied index."""
    descriptions: dict[int, GridDescription] = {}
    for district_id in sorted(layout.districts):
        descriptions.update(
            local_design(layout, layout.districts[district_id], prompt, providers, retries)
        )
    return descriptions
