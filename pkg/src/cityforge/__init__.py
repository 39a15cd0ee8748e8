"""cityforge: text-to-city engine with grid planning, per-tile generation
loops, scene assembly, and relationship-guided expansion."""

from .config import EngineConfig, load_config
from .model import (
    CityLayout,
    CityProject,
    DistrictBlueprint,
    GridCoord,
    GridDescription,
    coord_of,
    district_of,
    index_of,
    validate_layout,
)

__version__ = "0.1.0"

__all__ = [
    "CityLayout",
    "CityProject",
    "DistrictBlueprint",
    "EngineConfig",
    "GridCoord",
    "GridDescription",
    "coord_of",
    "district_of",
    "index_of",
    "load_config",
    "validate_layout",
    "__version__",
]
