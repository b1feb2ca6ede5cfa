"""Planar geometry for the grid-to-zone overlay and centroid assignment.

Coordinates are assumed to be in a planar equal-area projection (meters);
nothing here does geodetic math.

Ring convention: rings are stored *implicitly closed* (a repeated closing
vertex in the input is dropped). Exteriors are normalized to
counter-clockwise and holes to clockwise on construction, so the signed
area of a polygon is simply the sum of its rings' signed areas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from freightej import kernels
from freightej.errors import DataError, EmptyOverlayError, InvalidGeometryError


class Point(NamedTuple):
    x: float
    y: float

    @classmethod
    def checked(cls, x, y) -> "Point":
        x = float(x)
        y = float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidGeometryError(f"non-finite point ({x}, {y})")
        return cls(x, y)


def _as_ring(coords) -> np.ndarray:
    xy = np.array(coords, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise InvalidGeometryError("ring must be a sequence of (x, y) pairs")
    if not np.all(np.isfinite(xy)):
        raise InvalidGeometryError("ring has non-finite coordinates")
    if xy.shape[0] > 1 and np.array_equal(xy[0], xy[-1]):
        xy = xy[:-1]
    if np.unique(xy, axis=0).shape[0] < 3:
        raise InvalidGeometryError("ring needs at least 3 distinct vertices")
    return np.ascontiguousarray(xy)


@dataclass(frozen=True, eq=False)
class Polygon:
    """Exterior ring plus optional holes. ``Polygon(())`` is the empty polygon."""

    rings: tuple

    def __post_init__(self):
        rings = []
        for i, ring in enumerate(self.rings):
            xy = _as_ring(ring)
            area = kernels.ring_signed_area(xy)
            want_ccw = i == 0
            if (area < 0 and want_ccw) or (area > 0 and not want_ccw):
                xy = np.ascontiguousarray(xy[::-1])
            xy.setflags(write=False)
            rings.append(xy)
        object.__setattr__(self, "rings", tuple(rings))

    @classmethod
    def from_coords(cls, exterior, holes=()) -> "Polygon":
        return cls((exterior, *holes))

    @property
    def is_empty(self) -> bool:
        return len(self.rings) == 0

    @property
    def exterior(self) -> np.ndarray:
        return self.rings[0]

    @property
    def holes(self) -> tuple:
        return self.rings[1:]

    def bounds(self):
        """(xmin, ymin, xmax, ymax) of the exterior ring."""
        ext = self.exterior
        return (float(ext[:, 0].min()), float(ext[:, 1].min()),
                float(ext[:, 0].max()), float(ext[:, 1].max()))

    def translated(self, dx, dy) -> "Polygon":
        return Polygon(tuple(r + np.array([dx, dy]) for r in self.rings))

    def to_json(self) -> list:
        return [r.tolist() for r in self.rings]


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return int(v > 0) - int(v < 0)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    return ((o1 == 0 and on_seg(p1, p2, p3)) or (o2 == 0 and on_seg(p1, p2, p4))
            or (o3 == 0 and on_seg(p3, p4, p1)) or (o4 == 0 and on_seg(p3, p4, p2)))


def ring_is_simple(ring) -> bool:
    """O(n^2) check that no two non-adjacent edges of the ring touch."""
    xy = np.asarray(ring, dtype=float)
    n = xy.shape[0]
    edges = [(xy[i], xy[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def polygon_area(poly: Polygon) -> float:
    """Exterior area minus hole areas (shoelace), in squared coordinate units."""
    if poly.is_empty:
        return 0.0
    return abs(sum(kernels.ring_signed_area(r) for r in poly.rings))


def multipolygon_area(parts: Sequence[Polygon]) -> float:
    return sum(polygon_area(p) for p in parts)


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidGeometryError(f"degenerate rectangle {self}")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


def clip_to_cell(poly: Polygon, cell: Rect) -> Polygon:
    """Intersection of ``poly`` with an axis-aligned rectangle.

    Each ring is clipped independently (Sutherland-Hodgman against the four
    cell edges). If the exterior vanishes the empty polygon is returned;
    holes that vanish are dropped.
    """
    if poly.is_empty:
        return poly
    rings = []
    for i, ring in enumerate(poly.rings):
        out = kernels.clip_ring_rect(ring, cell.xmin, cell.ymin, cell.xmax, cell.ymax)
        if out.shape[0] < 3 or np.unique(out, axis=0).shape[0] < 3:
            if i == 0:
                return Polygon(())
            continue
        rings.append(out)
    return Polygon(tuple(rings))


def locate_points(px, py, poly: Polygon) -> np.ndarray:
    """Vectorized location codes: 0 outside, 1 inside, 2 on a boundary."""
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    if poly.is_empty:
        return np.zeros(px.shape[0], dtype=np.int8)
    loc = kernels.points_ring_location(px, py, poly.exterior)
    for hole in poly.holes:
        h = kernels.points_ring_location(px, py, hole)
        candidates = loc != kernels.OUTSIDE
        loc = np.where(candidates & (h == kernels.INSIDE), kernels.OUTSIDE, loc)
        loc = np.where(candidates & (h == kernels.BOUNDARY), kernels.BOUNDARY, loc)
    return loc.astype(np.int8)


def points_in_polygon(px, py, poly: Polygon) -> np.ndarray:
    """Boolean mask; boundary points count as inside."""
    return locate_points(px, py, poly) != kernels.OUTSIDE


def point_in_polygon(p, poly: Polygon) -> bool:
    p = Point.checked(*p)
    return bool(points_in_polygon(np.array([p.x]), np.array([p.y]), poly)[0])


@dataclass(frozen=True)
class GridSpec:
    origin: Point = Point(0.0, 0.0)
    cell_size: float = 36_000.0
    n_cols: int = 148
    n_rows: int = 112

    def __post_init__(self):
        object.__setattr__(self, "origin", Point.checked(*self.origin))
        if not self.cell_size > 0:
            raise InvalidGeometryError("cell_size must be positive")
        if self.n_cols < 1 or self.n_rows < 1:
            raise InvalidGeometryError("grid needs at least one row and column")

    def cell(self, col: int, row: int) -> Rect:
        x0, y0 = self.origin
        return Rect(x0 + col * self.cell_size, y0 + row * self.cell_size,
                    x0 + (col + 1) * self.cell_size, y0 + (row + 1) * self.cell_size)

    @property
    def extent(self) -> Rect:
        return Rect(self.origin.x, self.origin.y,
                    self.origin.x + self.n_cols * self.cell_size,
                    self.origin.y + self.n_rows * self.cell_size)

    def translated(self, dx, dy) -> "GridSpec":
        return GridSpec(Point(self.origin.x + dx, self.origin.y + dy),
                        self.cell_size, self.n_cols, self.n_rows)

    def cell_range(self, xmin, ymin, xmax, ymax):
        """Half-open column/row index ranges covering a bounding box, clamped to the grid."""
        cs = self.cell_size
        c0 = max(0, math.floor((xmin - self.origin.x) / cs))
        c1 = min(self.n_cols, math.floor((xmax - self.origin.x) / cs) + 1)
        r0 = max(0, math.floor((ymin - self.origin.y) / cs))
        r1 = min(self.n_rows, math.floor((ymax - self.origin.y) / cs) + 1)
        return c0, c1, r0, r1


def _parts(zone) -> tuple:
    if isinstance(zone, Polygon):
        return (zone,)
    return tuple(zone)


def overlay_areas(zone, grid: GridSpec) -> dict:
    """Area of ``zone`` (a Polygon or its parts) falling in each grid cell."""
    acc = {}
    for part in _parts(zone):
        if part.is_empty:
            continue
        c0, c1, r0, r1 = grid.cell_range(*part.bounds())
        if c1 <= c0 or r1 <= r0:
            continue
        block = np.zeros((r1 - r0, c1 - c0))
        for ring in part.rings:
            block += kernels.ring_cell_areas(ring, grid.origin.x, grid.origin.y,
                                             grid.cell_size, c0, c1, r0, r1)
        rows, cols = np.nonzero(block > 0.0)
        for r, c in zip(rows.tolist(), cols.tolist()):
            key = (c0 + c, r0 + r)
            acc[key] = acc.get(key, 0.0) + float(block[r, c])
    return {k: acc[k] for k in sorted(acc, key=lambda k: (k[1], k[0]))}


def overlay_weights(zone, grid: GridSpec) -> dict:
    """Fraction of the zone's area in each intersected cell, keyed by (col, row).

    Cells with no overlap are omitted. The weights sum to one when the
    zone lies inside the grid extent and to less otherwise.
    """
    total = multipolygon_area(_parts(zone))
    if not total > 0:
        raise InvalidGeometryError("zone has zero area")
    areas = overlay_areas(zone, grid)
    if not areas:
        raise EmptyOverlayError("zone lies entirely outside the grid extent")
    return {k: a / total for k, a in areas.items()}


@dataclass(frozen=True, eq=False)
class Zone:
    """A county or tract: one or more polygon parts sharing an id."""

    zone_id: str
    parts: tuple
    attrs: dict = field(default_factory=dict)

    @property
    def area(self) -> float:
        return multipolygon_area(self.parts)

    def bounds(self):
        b = np.array([p.bounds() for p in self.parts if not p.is_empty])
        return (b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max())

    def locate(self, px, py) -> np.ndarray:
        """Boolean mask of points inside (or on the boundary of) any part."""
        px = np.asarray(px, dtype=np.float64)
        py = np.asarray(py, dtype=np.float64)
        hit = np.zeros(px.shape[0], dtype=bool)
        for part in self.parts:
            if part.is_empty:
                continue
            xmin, ymin, xmax, ymax = part.bounds()
            cand = np.flatnonzero((px >= xmin) & (px <= xmax) & (py >= ymin) & (py <= ymax))
            if cand.size:
                hit[cand] |= points_in_polygon(px[cand], py[cand], part)
        return hit


# --- zone file I/O ---------------------------------------------------------
#
# Native format:
#   {"zones": [{"id": "A", "polygons": [[ring, hole, ...], ...], "attrs": {...}}]}
# where each ring is a list of [x, y] pairs. A GeoJSON FeatureCollection with
# Polygon / MultiPolygon geometries and an id property is accepted as well.


def _zone_from_polygons(zone_id, polygons, attrs, check_simple) -> Zone:
    parts = []
    for rings in polygons:
        poly = Polygon(tuple(rings))
        if check_simple and not ring_is_simple(poly.exterior):
            raise InvalidGeometryError(f"zone {zone_id}: exterior ring self-intersects")
        parts.append(poly)
    if not parts:
        raise InvalidGeometryError(f"zone {zone_id} has no polygons")
    return Zone(str(zone_id), tuple(parts), dict(attrs or {}))


def load_zones(path, id_field="id", check_simple=False) -> list:
    """Read zones from the JSON geometry format; multiple records with one id are merged."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"zones file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None

    records = []
    if doc.get("type") == "FeatureCollection":
        for feat in doc["features"]:
            props = feat.get("properties") or {}
            geom = feat["geometry"]
            polys = [geom["coordinates"]] if geom["type"] == "Polygon" else geom["coordinates"]
            zid = props.get(id_field, feat.get("id"))
            records.append((zid, polys, {k: v for k, v in props.items() if k != id_field}))
    else:
        for z in doc["zones"]:
            records.append((z["id"], z["polygons"], z.get("attrs")))

    merged = {}
    for zid, polys, attrs in records:
        if zid is None:
            raise DataError(f"{path}: zone without an id")
        zone = _zone_from_polygons(zid, polys, attrs, check_simple)
        if zone.zone_id in merged:
            prev = merged[zone.zone_id]
            zone = Zone(prev.zone_id, prev.parts + zone.parts, {**prev.attrs, **zone.attrs})
        merged[zone.zone_id] = zone
    return [merged[k] for k in sorted(merged)]


def dump_zones(zones: Iterable[Zone], path) -> None:
    doc = {"zones": [
        {"id": z.zone_id, "polygons": [p.to_json() for p in z.parts], "attrs": z.attrs}
        for z in zones
    ]}
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))
