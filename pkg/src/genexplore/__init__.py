"""Multi-robot exploration with predictive map completion and
generative-entropy task allocation."""

from .grid import (CellState, ErrorLabel, ErrorMap, GridImage, OccupancyGrid,
                   accuracy, decode, encode, error_map)
from .worldgen import Building, PlacementError, Street, TownLayout, TownParams, generate

__all__ = [
    "CellState", "ErrorLabel", "ErrorMap", "GridImage", "OccupancyGrid",
    "accuracy", "decode", "encode", "error_map",
    "Building", "PlacementError", "Street", "TownLayout", "TownParams", "generate",
]
