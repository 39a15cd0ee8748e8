"""Engine configuration: optimizer constants, loop bounds, style materials,
worker limits, and provider endpoints. Loadable from a JSON file; every field
has the shipped default."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .assembly import AssemblyConfig, Material, StyleConfig
from .expansion import DEFAULT_LAMBDA, RELATION_WEIGHTS, Relation
from .genloop import LoopConfig
from .providers import ProviderConfig


@dataclass(frozen=True)
class EngineConfig:
    seed: int = 0
    mock: bool = False
    lambda_semantic: float = DEFAULT_LAMBDA
    relation_weights: dict[Relation, float] = field(
        default_factory=lambda: dict(RELATION_WEIGHTS)
    )
    normalize_distance_by_district_size: bool = False
    score_threshold: int = 6
    max_iterations: int = 3
    plan_retries: int = 2
    design_retries: int = 2
    expansion_retries: int = 2
    workers: int = 2
    retrieval_k: int = 3
    max_traits_chars: int = 1200
    assembly: AssemblyConfig = field(default_factory=AssemblyConfig)
    style: StyleConfig = field(default_factory=StyleConfig)
    providers: dict[str, ProviderConfig] = field(default_factory=dict)

    @property
    def loop(self) -> LoopConfig:
        return LoopConfig(
            score_threshold=self.score_threshold, max_iterations=self.max_iterations
        )

    def provider_config(self, role: str) -> ProviderConfig:
        return self.providers.get(role, ProviderConfig())


def _material_from_dict(data: Mapping[str, Any]) -> Material:
    return Material(tuple(float(v) for v in data["rgba"]), float(data["roughness"]))


def config_from_dict(data: Mapping[str, Any]) -> EngineConfig:
    config = EngineConfig()
    simple = {
        key: data[key]
        for key in (
            "seed",
            "mock",
            "lambda_semantic",
            "normalize_distance_by_district_size",
            "score_threshold",
            "max_iterations",
            "plan_retries",
            "design_retries",
            "expansion_retries",
            "workers",
            "retrieval_k",
            "max_traits_chars",
        )
        if key in data
    }
    if simple:
        config = replace(config, **simple)
    if "relation_weights" in data:
        weights = dict(RELATION_WEIGHTS)
        for token, value in data["relation_weights"].items():
            weights[Relation(token)] = float(value)
        config = replace(config, relation_weights=weights)
    if "assembly" in data:
        config = replace(config, assembly=AssemblyConfig(**data["assembly"]))
    if "style" in data:
        style = StyleConfig()
        if "road_material" in data["style"]:
            style = replace(
                style, road_material=_material_from_dict(data["style"]["road_material"])
            )
        if "ground_material" in data["style"]:
            style = replace(
                style,
                ground_material=_material_from_dict(data["style"]["ground_material"]),
            )
        config = replace(config, style=style)
    if "providers" in data:
        config = replace(
            config,
            providers={
                role: ProviderConfig(**settings)
                for role, settings in data["providers"].items()
            },
        )
    return config


def load_config(path: str | Path) -> EngineConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
