"""Procedural generator for urban ground-truth maps.

A town is a curved main street crossing the map with parameterized
buildings (rectangular, L-shaped, C-shaped) placed along both sides.
Generation is a pure function of the parameter seed. The shape and
placement samplers are exposed separately so the map predictor can draw
building hypotheses from the same prior the generator uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .grid import CellState, OccupancyGrid

# Buildings with degenerate sampled dimensions are clamped up to this size.
MIN_BUILDING_DIM = 1.0
# Minimum clearance kept between footprints, in cells (keeps observed
# buildings separable as connected components).
FOOTPRINT_GAP_CELLS = 2


@dataclass
class TownParams:
    """Prior distribution parameters for town generation."""

    seed: int = 0
    street_curvature_range: tuple[float, float] = (-0.006, 0.006)  # 1/m
    street_width: float = 8.0
    building_count_range: tuple[int, int] = (3, 8)
    building_types: tuple[str, ...] = ("rect", "l", "c")
    building_dims_range: tuple[float, float] = (6.0, 18.0)  # per-side, meters
    spacing_jitter: float = 3.0
    angle_jitter: float = 0.15  # radians
    setback_range: tuple[float, float] = (1.0, 5.0)  # street edge to building
    notch_frac_range: tuple[float, float] = (0.3, 0.6)

    def __post_init__(self):
        if self.building_count_range[0] > self.building_count_range[1]:
            raise ValueError("building_count_range min > max")
        if self.building_dims_range[0] > self.building_dims_range[1]:
            raise ValueError("building_dims_range min > max")
        if self.street_curvature_range[0] > self.street_curvature_range[1]:
            raise ValueError("street_curvature_range min > max")


@dataclass
class Building:
    """A building footprint: an oriented rectangle, optionally notched.

    The local frame has u along the street-parallel axis (building width)
    and v across it (depth). kind selects the footprint predicate:
      rect: |u| <= w/2, |v| <= d/2
      l:    rect minus the corner quadrant (sx, sy) with fractions (fx, fy)
      c:    rect minus a centered bite on the v-side `side`, opening
            fraction f_open of the width, f_deep of the depth
    """

    kind: str
    center: tuple[float, float]
    angle: float
    width: float
    depth: float
    notch: tuple = ()

    def __post_init__(self):
        if self.kind not in ("rect", "l", "c"):
            raise ValueError(f"unknown building kind {self.kind!r}")
        self.width = max(float(self.width), MIN_BUILDING_DIM)
        self.depth = max(float(self.depth), MIN_BUILDING_DIM)

    def contains_local(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Footprint predicate in the local frame (closed boundary)."""
        inside = (np.abs(u) <= self.width / 2) & (np.abs(v) <= self.depth / 2)
        if self.kind == "l":
            sx, sy, fx, fy = self.notch
            cut = ((sx * u > self.width / 2 - fx * self.width)
                   & (sy * v > self.depth / 2 - fy * self.depth))
            inside &= ~cut
        elif self.kind == "c":
            side, f_open, f_deep = self.notch
            cut = ((np.abs(u) < f_open * self.width / 2)
                   & (side * v > self.depth / 2 - f_deep * self.depth))
            inside &= ~cut
        return inside

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Footprint predicate for an (N, 2) array of world points."""
        pts = np.atleast_2d(points) - np.asarray(self.center)
        c, s = np.cos(self.angle), np.sin(self.angle)
        u = pts[:, 0] * c + pts[:, 1] * s
        v = -pts[:, 0] * s + pts[:, 1] * c
        return self.contains_local(u, v)

    def corners(self) -> np.ndarray:
        """World corners of the bounding rectangle (ignores notches)."""
        w2, d2 = self.width / 2, self.depth / 2
        local = np.array([[-w2, -d2], [w2, -d2], [w2, d2], [-w2, d2]])
        c, s = np.cos(self.angle), np.sin(self.angle)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.asarray(self.center)

    def polygon(self) -> np.ndarray:
        """Explicit footprint polygon (CCW in the local frame, then posed)."""
        w2, d2 = self.width / 2, self.depth / 2
        if self.kind == "rect":
            local = [(-w2, -d2), (w2, -d2), (w2, d2), (-w2, d2)]
        elif self.kind == "l":
            sx, sy, fx, fy = self.notch
            nu, nv = fx * self.width, fy * self.depth
            # Base polygon with the notch at the (+u, +v) corner, then mirror.
            local = [(-w2, -d2), (w2, -d2), (w2, d2 - nv),
                     (w2 - nu, d2 - nv), (w2 - nu, d2), (-w2, d2)]
            local = [(sx * u, sy * v) for u, v in local]
        else:  # c
            side, f_open, f_deep = self.notch
            ow, nv = f_open * self.width / 2, f_deep * self.depth
            local = [(-w2, -d2), (w2, -d2), (w2, d2), (ow, d2),
                     (ow, d2 - nv), (-ow, d2 - nv), (-ow, d2), (-w2, d2)]
            local = [(u, side * v) for u, v in local]
        local = np.asarray(local, dtype=float)
        c, s = np.cos(self.angle), np.sin(self.angle)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.asarray(self.center)


@dataclass
class Street:
    """Sampled street centerline with per-point tangents and arclengths."""

    points: np.ndarray    # (K, 2)
    tangents: np.ndarray  # (K, 2) unit vectors
    arclen: np.ndarray    # (K,) cumulative, arclen[0] == 0

    @property
    def normals(self) -> np.ndarray:
        t = self.tangents
        return np.stack([-t[:, 1], t[:, 0]], axis=1)

    def point_at(self, s: float) -> int:
        """Index of the centerline point nearest to arclength s."""
        i = int(np.searchsorted(self.arclen, s))
        return min(i, len(self.points) - 1)

    def nearest_index(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        d2 = ((pts[:, None, :] - self.points[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)


@dataclass
class TownLayout:
    street: Street
    buildings: list[Building] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "street_centerline": self.street.points.round(4).tolist(),
            "buildings": [
                {
                    "kind": b.kind,
                    "center": [round(float(b.center[0]), 4),
                               round(float(b.center[1]), 4)],
                    "angle": round(float(b.angle), 6),
                    "width": round(float(b.width), 4),
                    "depth": round(float(b.depth), 4),
                    "notch": list(b.notch),
                }
                for b in self.buildings
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2)


class PlacementError(Exception):
    """Raised when a footprint cannot be rasterized inside the map."""


def sample_street(rng: np.random.Generator, params: TownParams,
                  like: OccupancyGrid, step: float = 0.5) -> Street:
    """Draw a quadratic-arc street crossing the map.

    The centerline is P(t) = C + t*u + (k*t^2/2)*n for a random heading u,
    curvature k, and a center point jittered around the map middle.
    """
    ext_x, ext_y = like.extent
    center = np.array([
        like.origin[0] + ext_x / 2 + rng.uniform(-0.1, 0.1) * ext_x,
        like.origin[1] + ext_y / 2 + rng.uniform(-0.1, 0.1) * ext_y,
    ])
    phi = rng.uniform(0.0, 2 * np.pi)
    kappa = rng.uniform(*params.street_curvature_range)
    u = np.array([np.cos(phi), np.sin(phi)])
    n = np.array([-u[1], u[0]])

    half_len = 0.75 * max(ext_x, ext_y)
    t = np.arange(-half_len, half_len + step, step)
    points = center + t[:, None] * u + (0.5 * kappa * t * t)[:, None] * n
    tangents = u + (kappa * t)[:, None] * n
    tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    arclen = np.concatenate([[0.0], np.cumsum(seg)])
    return Street(points, tangents, arclen)


def corridor_mask(street: Street, half_width: float,
                  like: OccupancyGrid) -> np.ndarray:
    """Cells whose center lies within half_width of the centerline points."""
    xs, ys = like.cell_centers()
    cx, cy = np.meshgrid(xs, ys)
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)
    dist, _ = cKDTree(street.points).query(centers)
    return (dist <= half_width).reshape(like.cells.shape)


def sample_building_shape(rng: np.random.Generator, params: TownParams,
                          min_width: float = 0.0,
                          min_depth: float = 0.0) -> tuple[str, float, float, tuple]:
    """Sample (kind, width, depth, notch) from the shape prior.

    min_width/min_depth truncate the dimension prior from below, which the
    predictor uses to propose completions covering an observed fragment.
    """
    kind = str(rng.choice(params.building_types))
    d_lo, d_hi = params.building_dims_range
    w_lo = max(d_lo, min_width)
    d_lo2 = max(d_lo, min_depth)
    width = rng.uniform(w_lo, max(d_hi, w_lo))
    depth = rng.uniform(d_lo2, max(d_hi, d_lo2))
    n_lo, n_hi = params.notch_frac_range
    if kind == "l":
        sx = 1 if rng.random() < 0.5 else -1
        sy = 1 if rng.random() < 0.5 else -1
        notch = (sx, sy, rng.uniform(n_lo, n_hi), rng.uniform(n_lo, n_hi))
    elif kind == "c":
        side = 1 if rng.random() < 0.5 else -1
        notch = (side, rng.uniform(n_lo, n_hi), rng.uniform(n_lo, n_hi))
    else:
        notch = ()
    return kind, width, depth, notch


def footprint_region(building: Building, like: OccupancyGrid
                     ) -> tuple[np.ndarray, int, int]:
    """Rasterize the footprint over its clipped bounding box.

    Returns (mask, iy0, ix0): a boolean array covering the in-bounds part of
    the building's bounding box, True where the cell center is inside the
    footprint. Cells outside map bounds are simply not represented.
    """
    corners = building.corners()
    res = like.resolution
    ix0 = max(0, int(np.floor((corners[:, 0].min() - like.origin[0]) / res)))
    iy0 = max(0, int(np.floor((corners[:, 1].min() - like.origin[1]) / res)))
    ix1 = min(like.width, int(np.ceil((corners[:, 0].max() - like.origin[0]) / res)) + 1)
    iy1 = min(like.height, int(np.ceil((corners[:, 1].max() - like.origin[1]) / res)) + 1)
    if ix1 <= ix0 or iy1 <= iy0:
        return np.zeros((0, 0), dtype=bool), iy0, ix0
    xs = like.origin[0] + (np.arange(ix0, ix1) + 0.5) * res
    ys = like.origin[1] + (np.arange(iy0, iy1) + 0.5) * res
    cx, cy = np.meshgrid(xs, ys)
    pts = np.stack([cx.ravel(), cy.ravel()], axis=1)
    mask = building.contains(pts).reshape(iy1 - iy0, ix1 - ix0)
    return mask, iy0, ix0


def footprint_in_bounds(building: Building, like: OccupancyGrid,
                        margin: float = 0.5) -> bool:
    """Whether the building's bounding rectangle lies inside the map."""
    corners = building.corners()
    x0, y0 = like.origin
    ex, ey = like.extent
    return bool(np.all(corners[:, 0] >= x0 + margin)
                and np.all(corners[:, 0] <= x0 + ex - margin)
                and np.all(corners[:, 1] >= y0 + margin)
                and np.all(corners[:, 1] <= y0 + ey - margin))


def raster_building(building: Building, grid: OccupancyGrid) -> int:
    """Mark the footprint cells occupied; returns the cell count.

    Raises PlacementError if the footprint extends outside the map.
    """
    if not footprint_in_bounds(building, grid):
        raise PlacementError("footprint out of map bounds")
    mask, iy0, ix0 = footprint_region(building, grid)
    sub = grid.cells[iy0:iy0 + mask.shape[0], ix0:ix0 + mask.shape[1]]
    sub[mask] = CellState.OCCUPIED
    return int(mask.sum())


def make_building_at(rng: np.random.Generator, params: TownParams,
                     street: Street, s: float, side: int,
                     shape: Optional[tuple] = None) -> Building:
    """Pose a sampled building at arclength s on the given street side.

    Orientation follows the street tangent plus angular jitter; the center
    sits one setback plus half the depth beyond the corridor edge.
    """
    if shape is None:
        shape = sample_building_shape(rng, params)
    kind, width, depth, notch = shape
    idx = street.point_at(s)
    tangent = street.tangents[idx]
    normal = np.array([-tangent[1], tangent[0]]) * side
    setback = rng.uniform(*params.setback_range)
    offset = params.street_width / 2 + setback + depth / 2
    center = street.points[idx] + normal * offset
    angle = float(np.arctan2(tangent[1], tangent[0])
                  + rng.uniform(-params.angle_jitter, params.angle_jitter))
    return Building(kind, (float(center[0]), float(center[1])),
                    angle, width, depth, notch)


def place_buildings(rng: np.random.Generator, params: TownParams,
                    street: Street, like: OccupancyGrid, count: int,
                    accept: Callable[[Building], bool],
                    retries_per_building: int = 50) -> list[Building]:
    """Walk along the street placing up to `count` buildings.

    Each slot advances the cursor by the placed width plus a jittered gap.
    A building that cannot be placed within the retry budget is dropped
    silently; running out of street ends placement early.
    """
    ext = like.extent
    margin = 3.0
    x0, y0 = like.origin
    in_map = ((street.points[:, 0] >= x0 + margin)
              & (street.points[:, 0] <= x0 + ext[0] - margin)
              & (street.points[:, 1] >= y0 + margin)
              & (street.points[:, 1] <= y0 + ext[1] - margin))
    if not np.any(in_map):
        return []
    s_vals = street.arclen[in_map]
    s_lo, s_hi = float(s_vals.min()), float(s_vals.max())

    placed: list[Building] = []
    cursor = s_lo + rng.uniform(0.0, params.spacing_jitter + 4.0)
    while cursor < s_hi and len(placed) < count:
        slot_width = None
        for _ in range(retries_per_building):
            shape = sample_building_shape(rng, params)
            side = 1 if rng.random() < 0.5 else -1
            s = cursor + rng.uniform(-params.spacing_jitter, params.spacing_jitter)
            s = float(np.clip(s, s_lo, s_hi))
            b = make_building_at(rng, params, street, s, side, shape)
            if not footprint_in_bounds(b, like):
                continue
            if accept(b):
                placed.append(b)
                slot_width = b.width
                break
        if slot_width is None:
            slot_width = float(np.mean(params.building_dims_range))
        cursor += slot_width + 2.0 + rng.uniform(0.0, params.spacing_jitter)
    return placed


def generate(params: TownParams, width: int = 200, height: int = 200,
             resolution: float = 0.5,
             origin: tuple[float, float] = (0.0, 0.0)
             ) -> tuple[TownLayout, OccupancyGrid]:
    """Generate a town layout and its rasterized ground-truth grid.

    Deterministic in params (including the seed). Building interiors are
    rasterized solid; the street corridor and everything else stays free.
    """
    rng = np.random.default_rng(params.seed)
    grid = OccupancyGrid.full(width, height, CellState.FREE, resolution, origin)
    street = sample_street(rng, params, grid)
    corridor = corridor_mask(street, params.street_width / 2, grid)

    count = int(rng.integers(params.building_count_range[0],
                             params.building_count_range[1] + 1))
    blocked = corridor.copy()
    gap_structure = np.ones((2 * FOOTPRINT_GAP_CELLS + 1,) * 2, dtype=bool)

    def accept(b: Building) -> bool:
        mask, iy0, ix0 = footprint_region(b, grid)
        if mask.size == 0 or not mask.any():
            return False
        sub = blocked[iy0:iy0 + mask.shape[0], ix0:ix0 + mask.shape[1]]
        if np.any(mask & sub):
            return False
        # Claim the footprint plus a clearance ring so later buildings keep
        # their distance; dilate in a padded window around the footprint.
        g = FOOTPRINT_GAP_CELLS
        gy0, gx0 = max(0, iy0 - g), max(0, ix0 - g)
        gy1 = min(grid.height, iy0 + mask.shape[0] + g)
        gx1 = min(grid.width, ix0 + mask.shape[1] + g)
        window = np.zeros((gy1 - gy0, gx1 - gx0), dtype=bool)
        window[iy0 - gy0:iy0 - gy0 + mask.shape[0],
               ix0 - gx0:ix0 - gx0 + mask.shape[1]] = mask
        blocked[gy0:gy1, gx0:gx1] |= ndimage.binary_dilation(
            window, structure=gap_structure)
        return True

    buildings = place_buildings(rng, params, street, grid, count, accept)
    for b in buildings:
        raster_building(b, grid)
    return TownLayout(street, buildings), grid
