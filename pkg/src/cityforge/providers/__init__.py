from .base import (
    CallStats,
    EmbeddingVector,
    MeshAsset,
    ProviderConfig,
    ProviderSet,
    cosine,
    load_script_dir,
)
from .templates import TemplateLibrary

__all__ = [
    "CallStats",
    "EmbeddingVector",
    "MeshAsset",
    "ProviderConfig",
    "ProviderSet",
    "TemplateLibrary",
    "cosine",
    "load_script_dir",
]
