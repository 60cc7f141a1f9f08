"""Bundled fixture data: the four-point study grid and a synthetic
daily series spanning the 2012-01-01 .. 2013-08-24 observation window."""

from __future__ import annotations

import math
from datetime import date, datetime, time, timedelta, timezone
from importlib import resources

import numpy as np

from .grid import paper_fixture_grid
from .ingest import IceObservation

FIXTURE_FROM = date(2012, 1, 1)
FIXTURE_TO = date(2013, 8, 24)
_DATA_FILE = "data/fixture_span.obs"


def fixture_span() -> tuple[date, date]:
    """Inclusive day range covered by the bundled series."""
    return FIXTURE_FROM, FIXTURE_TO


def synthesize_fixture_span() -> list[IceObservation]:
    """Regenerate the bundled series from scratch, deterministically.

    One seeded seasonal random walk per fixture grid point, clipped to
    [0, 1]. The committed data file is exactly the serialization of this
    function's output; a test keeps the two in sync.
    """
    grid = paper_fixture_grid()
    days = (FIXTURE_TO - FIXTURE_FROM).days + 1
    records = []
    for point in grid:
        rng = np.random.default_rng(1000 * point.id + 7)
        base = 0.55 + 0.05 * point.id
        level = 0.0
        for i in range(days):
            level += rng.normal(0.0, 0.01)
            seasonal = 0.35 * math.cos(2.0 * math.pi * (i - 20.0) / 365.25)
            value = min(1.0, max(0.0, base + seasonal + level))
            ts = datetime.combine(
                FIXTURE_FROM + timedelta(days=i), time(0, 0), tzinfo=timezone.utc
            )
            records.append(IceObservation(point.id, ts, value, source="fixture"))
    return records


def fixture_text() -> str:
    """Raw bytes of the bundled `#obs v1` file, as a string."""
    return resources.files("icecast").joinpath(_DATA_FILE).read_text(encoding="utf-8")


def fixture_observations() -> list[IceObservation]:
    """Parsed bundled series, sorted by (point_id, timestamp)."""
    from .ingest import parse_records

    return parse_records(fixture_text(), source="fixture")
