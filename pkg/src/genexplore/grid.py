"""Occupancy grid data model, grayscale codec, and map-accuracy metrics.

Grids are dense row-major arrays of tri-state cells. The codec maps
occupied/free/unknown to the grayscale values 0/255/127 and derives a
binary inpainting mask from the unknown cells, so a grid survives an
encode/decode round trip bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from PIL import Image


class CellState(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


# Grayscale values used by the codec.
PIXEL_OCCUPIED = 0
PIXEL_FREE = 255
PIXEL_UNKNOWN = 127


@dataclass
class OccupancyGrid:
    """Dense tri-state occupancy grid.

    cells[iy, ix] holds the state of the cell whose lower-left corner is at
    world coordinates (origin[0] + ix*resolution, origin[1] + iy*resolution).
    """

    cells: np.ndarray  # uint8, shape (height, width), values in CellState
    resolution: float = 0.5
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.ndim != 2:
            raise ValueError("cells must be a 2-D array")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        """World size (width_m, height_m)."""
        return (self.width * self.resolution, self.height * self.resolution)

    @classmethod
    def full(cls, width: int, height: int, state: CellState,
             resolution: float = 0.5,
             origin: tuple[float, float] = (0.0, 0.0)) -> "OccupancyGrid":
        cells = np.full((height, width), int(state), dtype=np.uint8)
        return cls(cells, resolution, origin)

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.cells.copy(), self.resolution, self.origin)

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        """Map world coordinates to (ix, iy) cell indices (may be out of bounds)."""
        ix = int(np.floor((x - self.origin[0]) / self.resolution))
        iy = int(np.floor((y - self.origin[1]) / self.resolution))
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.origin[0] + (ix + 0.5) * self.resolution,
                self.origin[1] + (iy + 0.5) * self.resolution)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """World coordinates of all cell centers as (xs[W], ys[H])."""
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * self.resolution
        return xs, ys

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height


@dataclass
class GridImage:
    """Quantized grayscale encoding of a grid plus its inpainting mask.

    mask[iy, ix] == 1 exactly where pixels[iy, ix] == 127 (unknown).
    """

    pixels: np.ndarray  # uint8, shape (height, width)
    mask: np.ndarray    # uint8 in {0, 1}, shape (height, width)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        if self.pixels.shape != self.mask.shape:
            raise ValueError("pixels and mask shapes differ")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


class ErrorLabel(IntEnum):
    CORRECT_FREE = 0
    CORRECT_OCCUPIED = 1
    WRONG_FREE = 2      # predicted free, truth occupied
    WRONG_OCCUPIED = 3  # predicted occupied, truth free


# Render palette for error maps (RGB).
ERROR_COLORS = {
    ErrorLabel.CORRECT_FREE: (255, 255, 255),
    ErrorLabel.CORRECT_OCCUPIED: (0, 0, 0),
    ErrorLabel.WRONG_FREE: (0, 255, 0),
    ErrorLabel.WRONG_OCCUPIED: (0, 0, 255),
}
ERROR_COLOR_UNDEFINED = (127, 127, 127)


@dataclass
class ErrorMap:
    """Per-cell four-way prediction/truth comparison.

    labels is only meaningful where defined is True (prediction classified
    the cell as free or occupied).
    """

    labels: np.ndarray   # uint8 in ErrorLabel, shape (height, width)
    defined: np.ndarray  # bool, shape (height, width)

    def counts(self) -> dict[ErrorLabel, int]:
        out = {}
        for label in ErrorLabel:
            out[label] = int(np.count_nonzero(self.labels[self.defined] == label))
        return out

    def to_rgb(self) -> np.ndarray:
        rgb = np.empty(self.labels.shape + (3,), dtype=np.uint8)
        rgb[:] = ERROR_COLOR_UNDEFINED
        for label, color in ERROR_COLORS.items():
            rgb[self.defined & (self.labels == label)] = color
        return rgb


_ENCODE_LUT = np.zeros(256, dtype=np.uint8)
_ENCODE_LUT[CellState.FREE] = PIXEL_FREE
_ENCODE_LUT[CellState.OCCUPIED] = PIXEL_OCCUPIED
_ENCODE_LUT[CellState.UNKNOWN] = PIXEL_UNKNOWN


def encode(grid: OccupancyGrid) -> GridImage:
    """Encode a grid as a grayscale image (occupied=0, free=255, unknown=127)."""
    pixels = _ENCODE_LUT[grid.cells]
    mask = (grid.cells == CellState.UNKNOWN).astype(np.uint8)
    return GridImage(pixels, mask)


def decode(image: GridImage, threshold_low: int = 127, threshold_high: int = 127,
           resolution: float = 0.5,
           origin: tuple[float, float] = (0.0, 0.0)) -> OccupancyGrid:
    """Classify a grayscale image back into a tri-state grid.

    Pixels below threshold_low become occupied, above threshold_high free,
    and anything in between unknown. The defaults leave only the exact
    unknown value 127 unclassified, making decode the inverse of encode.
    """
    if threshold_low > threshold_high:
        raise ValueError("threshold_low must be <= threshold_high")
    px = image.pixels
    cells = np.full(px.shape, int(CellState.UNKNOWN), dtype=np.uint8)
    cells[px < threshold_low] = CellState.OCCUPIED
    cells[px > threshold_high] = CellState.FREE
    return OccupancyGrid(cells, resolution, origin)


def _check_same_shape(a: OccupancyGrid, b: OccupancyGrid):
    if a.cells.shape != b.cells.shape:
        raise ValueError(
            f"grid dimensions differ: {a.cells.shape} vs {b.cells.shape}")


def accuracy(predicted: OccupancyGrid, truth: OccupancyGrid,
             count_unknown_as_half: bool = True) -> float:
    """Fraction of cells where the prediction matches ground truth.

    Unknown predicted cells score 0.5 when count_unknown_as_half is set,
    otherwise they count as mismatches. Truth must be fully classified.
    """
    _check_same_shape(predicted, truth)
    if np.any(truth.cells == CellState.UNKNOWN):
        raise ValueError("ground truth contains unknown cells")
    total = truth.cells.size
    matches = int(np.count_nonzero(predicted.cells == truth.cells))
    if count_unknown_as_half:
        unknown = int(np.count_nonzero(predicted.cells == CellState.UNKNOWN))
        return (matches + 0.5 * unknown) / total
    return matches / total


def error_map(predicted: OccupancyGrid, truth: OccupancyGrid) -> ErrorMap:
    """Four-way comparison of a predicted map against ground truth."""
    _check_same_shape(predicted, truth)
    pred = predicted.cells
    tru = truth.cells
    defined = pred != CellState.UNKNOWN
    labels = np.zeros(pred.shape, dtype=np.uint8)
    pred_free = pred == CellState.FREE
    truth_free = tru == CellState.FREE
    labels[pred_free & truth_free] = ErrorLabel.CORRECT_FREE
    labels[~pred_free & ~truth_free] = ErrorLabel.CORRECT_OCCUPIED
    labels[pred_free & ~truth_free] = ErrorLabel.WRONG_FREE
    labels[~pred_free & truth_free] = ErrorLabel.WRONG_OCCUPIED
    return ErrorMap(labels, defined)


def save_grayscale_png(pixels: np.ndarray, path) -> None:
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(path)


def save_mask_png(mask: np.ndarray, path) -> None:
    """Write a 0/1 mask as an 8-bit PNG with values 0/255."""
    Image.fromarray((np.asarray(mask, dtype=np.uint8) * 255), mode="L").save(path)


def save_error_png(errors: ErrorMap, path) -> None:
    Image.fromarray(errors.to_rgb(), mode="RGB").save(path)


def load_grayscale_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L"), dtype=np.uint8)


def load_mask_png(path) -> np.ndarray:
    return (load_grayscale_png(path) > 0).astype(np.uint8)
