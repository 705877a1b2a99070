"""Environment ingestion: occupancy rasters and polygon JSON to boundary + obstacles."""
from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Polygon, box
from shapely.ops import unary_union

from .geometry import EPS_REL, polygon_area

log = logging.getLogger(__name__)

Ring = tuple  # tuple of (x, y) float pairs


class EnvError(Exception):
    """Base for environment construction failures."""


class ParseError(EnvError):
    def __init__(self, msg: str, offset: Optional[int] = None):
        self.offset = offset
        super().__init__(msg if offset is None else f"{msg} (byte offset {offset})")


class ValidationError(EnvError):
    def __init__(self, msg: str, index: Optional[int] = None):
        self.index = index
        super().__init__(msg)


class EmptyFreeSpaceError(EnvError):
    pass


def _ring(points) -> Ring:
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    return tuple(pts)


def _oriented(ring: Ring, ccw: bool) -> Ring:
    if (polygon_area(ring) > 0) != ccw:
        return tuple(reversed(ring))
    return ring


@dataclass(frozen=True)
class Environment:
    """Bounded 2D world: CCW boundary polygon minus CW obstacle polygons."""

    boundary: Ring
    obstacles: tuple = ()
    source_resolution: Optional[tuple] = None
    _free: Optional[object] = field(default=None, repr=False, compare=False)

    @cached_property
    def free_region(self):
        """Free space as a shapely (Multi)Polygon; cached per instance."""
        if self._free is not None:
            return self._free
        outer = Polygon(self.boundary)
        if not self.obstacles:
            return outer
        return outer.difference(unary_union([Polygon(o) for o in self.obstacles]))

    @property
    def free_components(self) -> list:
        g = self.free_region
        if g.is_empty:
            return []
        if isinstance(g, Polygon):
            return [g]
        return [p for p in getattr(g, "geoms", []) if isinstance(p, Polygon) and p.area > 0]

    @cached_property
    def bbox(self) -> tuple:
        b = np.asarray(self.boundary)
        return float(b[:, 0].min()), float(b[:, 1].min()), float(b[:, 0].max()), float(b[:, 1].max())

    @cached_property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def tol(self) -> float:
        return EPS_REL * self.diagonal

    def contains(self, p) -> bool:
        """Closed free-space membership."""
        return bool(shapely.intersects_xy(self.free_region, float(p[0]), float(p[1])))

    def to_dict(self) -> dict:
        return {"boundary": [list(v) for v in self.boundary],
                "obstacles": [[list(v) for v in o] for o in self.obstacles]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def make_environment(boundary, obstacles=(), source_resolution=None, validate=True) -> Environment:
    """Orient, validate and canonicalise a boundary + obstacles description.

    Obstacles that touch the boundary (or each other) are folded into the
    boundary / merged whenever the free space stays a single component.
    """
    outer = _oriented(_ring(boundary), ccw=True)
    obs = [_oriented(_ring(o), ccw=False) for o in obstacles]
    if validate:
        _validate(outer, obs)
    env = Environment(outer, tuple(obs), source_resolution)
    comps = env.free_components
    if not comps:
        raise EmptyFreeSpaceError("free space is empty")
    if len(comps) == 1:
        p = comps[0]
        canon_outer = _oriented(_ring(p.exterior.coords), ccw=True)
        canon_obs = tuple(_oriented(_ring(r.coords), ccw=False) for r in p.interiors)
        if canon_outer != outer or len(canon_obs) != len(obs) or not _same_rings(canon_obs, obs):
            env = Environment(canon_outer, canon_obs, source_resolution, _free=p)
    return env


def _same_rings(a, b) -> bool:
    return sorted(map(_canon_start, a)) == sorted(map(_canon_start, b))


def _canon_start(r: Ring) -> Ring:
    i = min(range(len(r)), key=lambda k: r[k])
    return r[i:] + r[:i]


def _validate(outer: Ring, obs: list) -> None:
    if len(outer) < 3:
        raise ValidationError("boundary needs at least 3 vertices", -1)
    bpoly = Polygon(outer)
    if not bpoly.is_valid or bpoly.area <= 0:
        raise ValidationError("boundary polygon is self-intersecting or degenerate", -1)
    polys = []
    for i, o in enumerate(obs):
        if len(o) < 3:
            raise ValidationError(f"obstacle {i} needs at least 3 vertices", i)
        p = Polygon(o)
        if not p.is_valid or p.area <= 0:
            raise ValidationError(f"obstacle {i} is self-intersecting or degenerate", i)
        if not bpoly.covers(p):
            raise ValidationError(f"obstacle {i} lies outside the boundary", i)
        polys.append(p)
    tree = shapely.STRtree(polys)
    for i, p in enumerate(polys):
        for j in tree.query(p):
            if j > i and p.relate_pattern(polys[j], "T********"):
                raise ValidationError(f"obstacle {i} overlaps obstacle {j}", i)


# --------------------------------------------------------------------------
# polygon JSON

def load_polygon_env(text: str) -> Environment:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", e.pos) from None
    if not isinstance(data, dict) or "boundary" not in data:
        raise ParseError("missing 'boundary'")
    try:
        boundary = [(float(x), float(y)) for x, y in data["boundary"]]
        obstacles = [[(float(x), float(y)) for x, y in o] for o in data.get("obstacles", [])]
    except (TypeError, ValueError) as e:
        raise ParseError(f"malformed coordinates: {e}") from None
    return make_environment(boundary, obstacles)


def serialize_env(env: Environment) -> str:
    return env.to_json()


def count_independent_obstacles(env: Environment) -> int:
    """Obstacle regions fully surrounded by free space (holes of the free region)."""
    return sum(len(p.interiors) for p in env.free_components)


# --------------------------------------------------------------------------
# occupancy grids

@dataclass(frozen=True)
class OccupancyGrid:
    width: int
    height: int
    cells: np.ndarray  # (height, width) bool, True = occupied, row 0 at y = 0
    cell_size: float = 1.0

    def __post_init__(self):
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape does not match width/height")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")

    def cell_of(self, p) -> tuple:
        """(col, row) of the cell containing map point p."""
        return int(p[0] // self.cell_size), int(p[1] // self.cell_size)

    def center(self, col: int, row: int) -> tuple:
        return ((col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size)


def _parse_pgm(data: bytes):
    if data[:2] != b"P5":
        raise ParseError("not a binary PGM (missing P5 magic)", 0)
    pos = 2
    fields = []
    n = len(data)
    while len(fields) < 3:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ParseError("malformed PGM header", pos)
        fields.append(int(data[start:pos]))
    if pos >= n or not data[pos:pos + 1].isspace():
        raise ParseError("malformed PGM header", pos)
    pos += 1
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ParseError("non-positive PGM dimensions", pos)
    if not 0 < maxval <= 255:
        raise ParseError(f"unsupported PGM maxval {maxval}", pos)
    need = width * height
    body = data[pos:pos + need]
    if len(body) < need:
        raise ParseError(f"truncated PGM body: expected {need} bytes, got {len(body)}", pos + len(body))
    arr = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    if maxval != 255:
        arr = (arr.astype(np.float64) * (255.0 / maxval)).round().astype(np.uint8)
    return arr


def _parse_png(data: bytes):
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover
        raise ParseError("PNG support needs Pillow") from None
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as e:
        raise ParseError(f"unreadable PNG: {e}", 0) from None
    return np.asarray(img.convert("L"), dtype=np.uint8)


def load_occupancy_grid(data: bytes, format_tag: str = "pgm", threshold: int = 128,
                        invert: bool = False, cell_size: float = 1.0) -> OccupancyGrid:
    """Decode a grayscale raster; pixels darker than ``threshold`` are occupied."""
    tag = format_tag.lower().lstrip(".")
    if tag == "pgm":
        arr = _parse_pgm(data)
    elif tag == "png":
        arr = _parse_png(data)
    else:
        raise ParseError(f"unsupported raster format {format_tag!r}")
    occ = arr < threshold
    if invert:
        occ = ~occ
    h, w = occ.shape
    return OccupancyGrid(w, h, occ, cell_size)


def write_pgm(grid: OccupancyGrid) -> bytes:
    body = np.where(grid.cells, 0, 255).astype(np.uint8)
    return b"P5\n%d %d\n255\n" % (grid.width, grid.height) + body.tobytes()


def _occupied_geometry(g: OccupancyGrid):
    cs = g.cell_size
    boxes = []
    for r in range(g.height):
        row = g.cells[r]
        if not row.any():
            continue
        d = np.diff(np.concatenate(([0], row.view(np.int8), [0])))
        starts = np.flatnonzero(d == 1)
        ends = np.flatnonzero(d == -1)
        for s, e in zip(starts, ends):
            boxes.append(box(s * cs, r * cs, e * cs, (r + 1) * cs))
    return unary_union(boxes) if boxes else Polygon()


def _simplify_ring(coords, tol: float):
    ring = shapely.LinearRing(coords)
    x0, y0, x1, y1 = ring.bounds
    # small contours would collapse to slivers at the global tolerance
    t = min(tol, 0.25 * min(x1 - x0, y1 - y0))
    return shapely.simplify(ring, t).coords


def _simplify_free(free, tol: float):
    polys = [free] if isinstance(free, Polygon) else list(getattr(free, "geoms", []))
    out = []
    for p in polys:
        q = Polygon(_simplify_ring(p.exterior.coords, tol),
                    [_simplify_ring(r.coords, tol) for r in p.interiors])
        out.append(q)
    simp = out[0] if len(out) == 1 else MultiPolygon(out)
    if simp.is_valid and len(out) == len(polys):
        return simp
    return shapely.make_valid(free.simplify(tol, preserve_topology=True))


def grid_to_environment(g: OccupancyGrid, simplify_tol: float = 1.5) -> Environment:
    """Polygonise an occupancy grid.

    Occupied cells are unioned row-run by row-run, subtracted from the map
    rectangle, and the free region is simplified (Douglas-Peucker, topology
    preserving) at ``simplify_tol`` pixels.
    """
    cs = g.cell_size
    if g.cells.all():
        raise EmptyFreeSpaceError("grid is fully occupied")
    rect = box(0.0, 0.0, g.width * cs, g.height * cs)
    free = rect.difference(_occupied_geometry(g))
    if simplify_tol > 0:
        free = _simplify_free(free, simplify_tol * cs)
    if isinstance(free, Polygon):
        parts = [free]
    else:
        parts = [p for p in getattr(free, "geoms", []) if isinstance(p, Polygon) and p.area > 0]
    if not parts:
        raise EmptyFreeSpaceError("no free region survived polygonisation")
    res = (g.width, g.height)
    if len(parts) == 1:
        p = parts[0]
        return make_environment(p.exterior.coords, [r.coords for r in p.interiors],
                                source_resolution=res, validate=False)
    # several chambers: keep the map rectangle and describe the walls between them
    walls = rect.difference(MultiPolygon(parts))
    wall_parts = [walls] if isinstance(walls, Polygon) else list(walls.geoms)
    obstacles = []
    for w in wall_parts:
        if w.area <= 0:
            continue
        if len(w.interiors):
            log.warning("free chamber enclosed by a single obstacle is filled")
        obstacles.append(list(w.exterior.coords))
    env = Environment(_oriented(_ring(rect.exterior.coords), True),
                      tuple(_oriented(_ring(o), False) for o in obstacles), res)
    return env


def rasterize(env: Environment, width: int, height: int, cell_size: float = 1.0) -> OccupancyGrid:
    """Occupancy of each cell centre against the environment's free space."""
    xs = (np.arange(width) + 0.5) * cell_size
    ys = (np.arange(height) + 0.5) * cell_size
    X, Y = np.meshgrid(xs, ys)
    free = shapely.contains_xy(env.free_region, X.ravel(), Y.ravel()).reshape(height, width)
    return OccupancyGrid(width, height, ~free, cell_size)
