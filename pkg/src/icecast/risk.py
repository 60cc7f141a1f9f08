"""Hazard probabilities, hazard classes, and minimum-risk routes.

A cell's hazard is the probability that its forecast concentration exceeds
the navigability threshold c*, under the unclipped forecast Gaussian. Route
survival multiplies (1 - p) over every traversed cell, treating cells as
independent; the best route maximizes survival, found as a shortest path in
node weights -ln(1 - p).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from typing import Mapping

from scipy.stats import norm

from .errors import (
    IntegrityConflictError,
    MissingModelError,
    NotFoundError,
    ParseError,
    PathError,
    UnreachableError,
)
from .grid import GridModel
from .kalman import Forecast, PointModel, forecast

RISKFIELD_HEADER_PREFIX = "#riskfield v1"
DEFAULT_THRESHOLD = 0.7
# Class boundaries are conventions, not measured constants; override via
# classify_hazard(p, boundaries=...).
DEFAULT_CLASS_BOUNDARIES = (0.1, 0.4, 0.7)
# Certain-hazard cells stay traversable (at enormous cost) instead of
# producing an infinite edge weight.
_MAX_P = 1.0 - 1e-12


class HazardClass(Enum):
    LOW = "Low"
    MODERATE = "Moderate"
    HIGH = "High"
    EXTREME = "Extreme"


@dataclass(frozen=True)
class HazardAssessment:
    point_id: int
    exceedance_probability: float
    hazard_class: HazardClass


@dataclass(frozen=True, eq=False)
class RiskField:
    target_date: date
    threshold: float
    cells: Mapping[int, HazardAssessment]


@dataclass(frozen=True)
class Route:
    cells: tuple[int, ...]
    survival: float

    @property
    def total_hazard(self) -> float:
        return 1.0 - self.survival


def cell_hazard(fc: Forecast, threshold: float) -> float:
    """P(concentration > c*) under the unclipped forecast Gaussian."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if fc.variance < 0:
        raise ValueError(f"forecast variance must be >= 0, got {fc.variance}")
    sigma = math.sqrt(fc.variance)
    if sigma == 0.0:
        return 1.0 if fc.mean > threshold else 0.0
    return float(norm.sf((threshold - fc.mean) / sigma))


def classify_hazard(
    p: float, boundaries: tuple[float, float, float] = DEFAULT_CLASS_BOUNDARIES
) -> HazardClass:
    """Step function over exceedance probability; boundaries round up
    (p = 0.4 is High under the defaults)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    low, moderate, high = boundaries
    if p < low:
        return HazardClass.LOW
    if p < moderate:
        return HazardClass.MODERATE
    if p < high:
        return HazardClass.HIGH
    return HazardClass.EXTREME


def build_risk_field(
    grid: GridModel,
    point_models: Mapping[int, PointModel],
    horizon: int,
    threshold: float = DEFAULT_THRESHOLD,
    boundaries: tuple[float, float, float] = DEFAULT_CLASS_BOUNDARIES,
) -> RiskField:
    """Forecast every grid point ``horizon`` days past the common training
    end and classify the exceedance probabilities."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    last_days = set()
    for p in grid.points:
        if p.id not in point_models:
            raise MissingModelError(f"no fitted model for grid point {p.id}")
        last_days.add(point_models[p.id].last_day)
    if len(last_days) > 1:
        raise IntegrityConflictError(
            f"point models end on different days: {sorted(d.isoformat() for d in last_days)}"
        )
    cells = {}
    for p in grid.points:
        pm = point_models[p.id]
        fc = forecast(pm.state, pm.model, horizon)[-1]
        prob = cell_hazard(fc, threshold)
        cells[p.id] = HazardAssessment(p.id, prob, classify_hazard(prob, boundaries))
    target = next(iter(last_days)) + timedelta(days=horizon)
    return RiskField(target_date=target, threshold=threshold, cells=cells)


def _check_path(cells, grid: GridModel, field: RiskField) -> tuple[int, ...]:
    cells = tuple(cells)
    if not cells:
        raise PathError("route must contain at least one cell")
    if len(set(cells)) != len(cells):
        raise PathError(f"route repeats a cell: {cells}")
    for c in cells:
        grid.point(c)  # raises NotFoundError for unknown ids
        if c not in field.cells:
            raise NotFoundError(f"cell {c} missing from risk field")
    for a, b in zip(cells, cells[1:]):
        if not grid.adjacent(a, b):
            raise PathError(f"cells {a} and {b} are not adjacent")
    return cells


def route_risk(cells, grid: GridModel, field: RiskField) -> Route:
    """Survival and total hazard of a given simple path, endpoints included."""
    cells = _check_path(cells, grid, field)
    survival = 1.0
    for c in cells:
        survival *= 1.0 - field.cells[c].exceedance_probability
    return Route(cells=cells, survival=survival)


def _node_weight(p: float) -> float:
    return -math.log1p(-min(p, _MAX_P))


def best_route(grid: GridModel, field: RiskField, start: int, goal: int) -> Route:
    """Maximum-survival simple path from start to goal.

    Dijkstra over node weights w = -ln(1 - p), charging each step its
    destination cell and the start cell once. Ties break on fewer cells,
    then the lexicographically smallest id sequence.
    """
    grid.point(start)
    grid.point(goal)
    for node in (start, goal):
        if node not in field.cells:
            raise NotFoundError(f"cell {node} missing from risk field")
    weight = {p.id: _node_weight(field.cells[p.id].exceedance_probability) for p in grid.points}

    # Priority tuples (cost, length, path) strictly increase along edges, so
    # the first pop of a node carries its best label under the tie-break.
    heap = [(weight[start], 1, (start,))]
    settled = set()
    while heap:
        cost, length, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == goal:
            return route_risk(path, grid, field)
        for nxt in grid.neighbors(node):
            if nxt not in settled:
                heapq.heappush(heap, (cost + weight[nxt], length + 1, path + (nxt,)))
    raise UnreachableError(f"no path from {start} to {goal}")


def _fmt(x: float) -> str:
    return format(x, ".9g")


def dump_risk_field(field: RiskField) -> str:
    lines = [
        f"{RISKFIELD_HEADER_PREFIX} date={field.target_date.isoformat()} "
        f"threshold={_fmt(field.threshold)}"
    ]
    for pid in sorted(field.cells):
        cell = field.cells[pid]
        lines.append(f"{pid},{_fmt(cell.exceedance_probability)},{cell.hazard_class.value}")
    return "\n".join(lines) + "\n"


def load_risk_field(text: str) -> RiskField:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(RISKFIELD_HEADER_PREFIX):
        raise ParseError(f"missing {RISKFIELD_HEADER_PREFIX} header")
    header = dict(
        item.split("=", 1) for item in lines[0][len(RISKFIELD_HEADER_PREFIX) :].split() if "=" in item
    )
    try:
        target = date.fromisoformat(header["date"])
        threshold = float(header["threshold"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad riskfield header: {exc}") from None
    classes = {c.value: c for c in HazardClass}
    cells = {}
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 3 or fields[2] not in classes:
            raise ParseError(f"expected point_id,probability,class, got {line!r}", line_no)
        try:
            pid = int(fields[0])
            prob = float(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
        cells[pid] = HazardAssessment(pid, prob, classes[fields[2]])
    return RiskField(target_date=target, threshold=threshold, cells=cells)


def format_route(route: Route) -> str:
    ids = ",".join(str(c) for c in route.cells)
    return f"cells={ids}; survival={_fmt(route.survival)}; hazard={_fmt(route.total_hazard)}"
