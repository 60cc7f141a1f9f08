"""Parsing, validation, deduplication and interval-sorting of observation
records, plus the remote-fetch client.

Record format (`#obs v1`): one record per line,
``ISO-8601-UTC-timestamp,point_id,concentration``, `#` starts a comment.
Acquisition is daily at 00:00 UTC; concentration is the ice-covered fraction
of the cell in [0, 1].
"""

from __future__ import annotations

import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, replace
from datetime import date, datetime, time, timezone

import numpy as np

from .errors import (
    FetchError,
    IntegrityConflictError,
    ParseError,
    RangeError,
    TimestampError,
)

OBS_HEADER = "#obs v1"
TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass(frozen=True)
class IceObservation:
    """One (point, timestamp, concentration) record."""

    point_id: int
    timestamp: datetime
    concentration: float
    source: str = "file"


@dataclass(frozen=True)
class SeriesQuery:
    """Per-point day range, both bounds inclusive."""

    point_id: int
    from_day: date
    to_day: date

    def __post_init__(self):
        for name in ("from_day", "to_day"):
            bound = getattr(self, name)
            if isinstance(bound, datetime):
                object.__setattr__(self, name, bound.date())
        if self.from_day > self.to_day:
            raise ValueError(f"query range is empty: {self.from_day} > {self.to_day}")


def parse_timestamp(text: str) -> datetime:
    """Strict `2012-01-01T00:00:00Z` form, returned timezone-aware UTC."""
    return datetime.strptime(text, TS_FORMAT).replace(tzinfo=timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TS_FORMAT)


def parse_records(text: str, source: str = "file") -> list[IceObservation]:
    """Parse `#obs v1` content into observations, in file order.

    The first line must be the `#obs v1` header; later comment and blank
    lines are skipped. Malformed lines raise ParseError carrying the line
    number; out-of-range concentrations raise RangeError. Non-midnight
    timestamps parse fine here and are rejected by validate().
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != OBS_HEADER:
        raise ParseError(f"missing {OBS_HEADER} header", line_no=1)
    records = []
    for line_no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise ParseError(f"expected timestamp,point_id,concentration, got {line!r}", line_no)
        try:
            ts = parse_timestamp(fields[0].strip())
        except ValueError:
            raise ParseError(f"bad timestamp {fields[0].strip()!r}", line_no) from None
        try:
            point_id = int(fields[1])
        except ValueError:
            raise ParseError(f"bad point id {fields[1].strip()!r}", line_no) from None
        if point_id <= 0:
            raise ParseError(f"point id must be positive, got {point_id}", line_no)
        try:
            conc = float(fields[2])
        except ValueError:
            raise ParseError(f"non-numeric concentration {fields[2].strip()!r}", line_no) from None
        if not 0.0 <= conc <= 1.0:
            raise RangeError(f"concentration {conc!r} outside [0, 1]", line_no)
        records.append(IceObservation(point_id, ts, conc, source))
    return records


def serialize_records(records: list[IceObservation]) -> str:
    """Inverse of parse_records; repr() keeps concentrations lossless."""
    lines = [OBS_HEADER]
    for r in records:
        lines.append(f"{format_timestamp(r.timestamp)},{r.point_id},{r.concentration!r}")
    return "\n".join(lines) + "\n"


def validate(obs: IceObservation) -> IceObservation:
    """Return obs unchanged iff it is in range and stamped midnight UTC."""
    if not 0.0 <= obs.concentration <= 1.0:
        raise RangeError(f"concentration {obs.concentration!r} outside [0, 1]")
    ts = obs.timestamp
    if ts.tzinfo is None or ts.utcoffset().total_seconds() != 0:
        raise TimestampError(f"timestamp {ts!r} is not UTC")
    if ts.timetz().replace(tzinfo=None) != time(0, 0, 0):
        raise TimestampError(f"timestamp {ts.isoformat()} is not midnight UTC")
    return obs


def coerce_midnight(obs: IceObservation) -> IceObservation:
    """Truncate the time-of-day to 00:00 UTC (opt-in CLI behaviour)."""
    ts = obs.timestamp.astimezone(timezone.utc)
    return replace(obs, timestamp=datetime.combine(ts.date(), time(0, 0), tzinfo=timezone.utc))


def sort_by_interval(records: list[IceObservation], query: SeriesQuery) -> list[IceObservation]:
    """Records for the queried point inside the day window, ascending by
    timestamp; stable for equal timestamps."""
    matched = [
        r
        for r in records
        if r.point_id == query.point_id and query.from_day <= r.timestamp.date() <= query.to_day
    ]
    return sorted(matched, key=lambda r: r.timestamp)


def dedupe(records: list[IceObservation]) -> list[IceObservation]:
    """Collapse exact duplicates in a (point_id, timestamp)-sorted list.

    Two records with the same key but different concentrations are an
    integrity conflict, not a merge candidate.
    """
    out: list[IceObservation] = []
    for r in records:
        if out and (out[-1].point_id, out[-1].timestamp) == (r.point_id, r.timestamp):
            if out[-1].concentration != r.concentration:
                raise IntegrityConflictError(
                    f"point {r.point_id} at {format_timestamp(r.timestamp)}: "
                    f"conflicting concentrations {out[-1].concentration!r} vs {r.concentration!r}"
                )
            continue
        out.append(r)
    return out


def fetch_series(endpoint: str, query: SeriesQuery, timeout: float = 30.0) -> list[IceObservation]:
    """GET `<endpoint>?point=<id>&from=<day>&to=<day>` and parse the
    `#obs v1` body. All-or-nothing: any bad record fails the whole fetch."""
    params = urllib.parse.urlencode(
        {
            "point": query.point_id,
            "from": query.from_day.isoformat(),
            "to": query.to_day.isoformat(),
        }
    )
    url = f"{endpoint}?{params}"
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            status = resp.status
            body = resp.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        raise FetchError(f"fetch failed with status {exc.code}: {url}", status=exc.code) from None
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"fetch failed: {exc}") from None
    if not 200 <= status < 300:
        raise FetchError(f"fetch failed with status {status}: {url}", status=status)
    records = parse_records(body, source="fetch")
    for r in records:
        validate(r)
    return records


def to_daily_array(
    records: list[IceObservation], from_day: date, to_day: date
) -> np.ndarray:
    """Daily concentration vector over [from_day, to_day]; NaN on gap days.

    Records outside the window are ignored; gaps are never filled in.
    """
    if from_day > to_day:
        raise ValueError(f"empty day range: {from_day} > {to_day}")
    y = np.full((to_day - from_day).days + 1, np.nan)
    for r in records:
        offset = (r.timestamp.date() - from_day).days
        if 0 <= offset < y.size:
            y[offset] = r.concentration
    return y
