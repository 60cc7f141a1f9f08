"""Observation mesh: cell identities, integer grid coordinates, adjacency.

Points live at integer (gx, gy) coordinates; two points are adjacent iff
their coordinates differ by exactly one step along one axis (4-neighbourhood,
no diagonals). Adjacency is derived from the coordinates, so it is symmetric
and irreflexive by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import NotFoundError, ParseError

GRID_HEADER = "#grid v1"

# The four observation cells the source data was collected from, at their
# published grid coordinates.
FIXTURE_COORDS = ((50, 80), (135, 85), (173, 95), (193, 132))


@dataclass(frozen=True)
class GridPoint:
    """One observation cell, 25 km^2 by default."""

    id: int
    gx: int
    gy: int
    cell_area_km2: float = 25.0


class GridModel:
    """Immutable collection of grid points with 4-neighbour adjacency."""

    def __init__(self, points: Iterable[GridPoint]):
        pts = tuple(points)
        by_id: dict[int, GridPoint] = {}
        by_xy: dict[tuple[int, int], GridPoint] = {}
        for p in pts:
            if p.id < 0:
                raise ValueError(f"point id must be non-negative, got {p.id}")
            if p.cell_area_km2 <= 0:
                raise ValueError(f"cell_area_km2 must be positive, got {p.cell_area_km2}")
            if p.id in by_id:
                raise ValueError(f"duplicate point id {p.id}")
            if (p.gx, p.gy) in by_xy:
                raise ValueError(f"duplicate coordinates ({p.gx}, {p.gy})")
            by_id[p.id] = p
            by_xy[(p.gx, p.gy)] = p
        self._points = pts
        self._by_id = by_id
        self._by_xy = by_xy

    @property
    def points(self) -> tuple[GridPoint, ...]:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self) -> Iterator[GridPoint]:
        return iter(self._points)

    def __contains__(self, point_id: int) -> bool:
        return point_id in self._by_id

    def point(self, point_id: int) -> GridPoint:
        try:
            return self._by_id[point_id]
        except KeyError:
            raise NotFoundError(f"no grid point with id {point_id}") from None

    def neighbors(self, point_id: int) -> list[int]:
        """Ids of all 4-adjacent points, sorted ascending."""
        p = self.point(point_id)
        out = []
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            q = self._by_xy.get((p.gx + dx, p.gy + dy))
            if q is not None:
                out.append(q.id)
        return sorted(out)

    def adjacent(self, a: int, b: int) -> bool:
        pa, pb = self.point(a), self.point(b)
        return abs(pa.gx - pb.gx) + abs(pa.gy - pb.gy) == 1

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        """All adjacent (a, b) id pairs with a < b, sorted."""
        pairs = []
        for p in self._points:
            for nid in self.neighbors(p.id):
                if p.id < nid:
                    pairs.append((p.id, nid))
        return sorted(pairs)


def paper_fixture_grid() -> GridModel:
    """The four published observation cells; no pair is 4-adjacent."""
    return GridModel(
        GridPoint(id=i, gx=gx, gy=gy) for i, (gx, gy) in enumerate(FIXTURE_COORDS, start=1)
    )


def make_mesh(width: int, height: int) -> GridModel:
    """Full width x height mesh, ids assigned row-major starting at 1."""
    if width < 1 or height < 1:
        raise ValueError(f"mesh dimensions must be >= 1, got {width}x{height}")
    return GridModel(
        GridPoint(id=gy * width + gx + 1, gx=gx, gy=gy)
        for gy in range(height)
        for gx in range(width)
    )


def neighbors(grid: GridModel, point_id: int) -> list[int]:
    """Ids of all points 4-adjacent to ``point_id``, sorted ascending."""
    return grid.neighbors(point_id)


def dump_grid(grid: GridModel) -> str:
    lines = [GRID_HEADER]
    for p in sorted(grid.points, key=lambda p: p.id):
        lines.append(f"{p.id},{p.gx},{p.gy},{p.cell_area_km2!r}")
    return "\n".join(lines) + "\n"


def load_grid(text: str) -> GridModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != GRID_HEADER:
        raise ParseError(f"missing {GRID_HEADER} header", line_no=1)
    points = []
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ParseError(f"expected id,gx,gy,area_km2, got {line!r}", line_no)
        try:
            points.append(
                GridPoint(
                    id=int(fields[0]),
                    gx=int(fields[1]),
                    gy=int(fields[2]),
                    cell_area_km2=float(fields[3]),
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
    try:
        return GridModel(points)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
