"""Append-only, checksummed observation store with time-range queries.

Layout: a root directory of segment files, one per append batch, named
``seg-000001.txt`` onward. Each segment starts with the ``#icestore v1``
header; every record line is ``crc32_hex<TAB>timestamp,point_id,concentration``
with the CRC32 (IEEE polynomial) taken over the record text after the tab.
Segments are never rewritten; a torn final line fails its checksum on the
next open. A ``LOCK`` file in the root enforces the single-writer contract
while an append is in flight.
"""

from __future__ import annotations

import os
import zlib
from dataclasses import dataclass
from pathlib import Path

from .errors import CorruptionError, IntegrityConflictError, StoreLockedError
from .ingest import (
    IceObservation,
    SeriesQuery,
    format_timestamp,
    parse_timestamp,
    sort_by_interval,
)

STORE_HEADER = "#icestore v1"
SEGMENT_PREFIX = "seg-"
LOCK_NAME = "LOCK"


@dataclass(frozen=True)
class StoreSegment:
    path: Path
    records: tuple[IceObservation, ...]


@dataclass(frozen=True)
class IntegrityFailure:
    file: str
    line_no: int
    reason: str


@dataclass(frozen=True)
class IntegrityReport:
    segments_checked: int
    records_checked: int
    failures: tuple[IntegrityFailure, ...]

    @property
    def clean(self) -> bool:
        return not self.failures


def _record_text(obs: IceObservation) -> str:
    return f"{format_timestamp(obs.timestamp)},{obs.point_id},{obs.concentration!r}"


def _checksum(text: bytes) -> str:
    return f"{zlib.crc32(text) & 0xFFFFFFFF:08x}"


def _scan_segment(path: Path):
    """Yield (line_no, error_reason, obs) per record line; obs is None when
    the line is bad. Works on raw bytes so corrupt files never crash the scan."""
    data = path.read_bytes()
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    for line_no, raw in enumerate(lines, start=1):
        if line_no == 1:
            if raw != STORE_HEADER.encode():
                yield line_no, f"bad header {raw[:40]!r}", None
            continue
        parts = raw.split(b"\t")
        if len(parts) != 2:
            yield line_no, "missing checksum field", None
            continue
        stored, text = parts
        if stored != _checksum(text).encode():
            yield line_no, f"checksum mismatch (stored {stored.decode('latin-1')!r})", None
            continue
        try:
            fields = text.decode("ascii").split(",")
            if len(fields) != 3:
                raise ValueError("wrong field count")
            ts = parse_timestamp(fields[0])
            obs = IceObservation(int(fields[1]), ts, float(fields[2]), source="store")
        except (ValueError, UnicodeDecodeError):
            yield line_no, "unparseable record", None
            continue
        yield line_no, None, obs


class IceStore:
    """Handle over one store root. Use open_store() to construct."""

    def __init__(self, root: Path, segments: list[StoreSegment]):
        self.root = root
        self._segments = segments
        self._index: dict[tuple[int, str], float] = {}
        for seg in segments:
            for obs in seg.records:
                key = (obs.point_id, format_timestamp(obs.timestamp))
                if key in self._index:
                    raise IntegrityConflictError(
                        f"duplicate key point {key[0]} at {key[1]} across segments"
                    )
                self._index[key] = obs.concentration

    @property
    def segments(self) -> tuple[StoreSegment, ...]:
        return tuple(self._segments)

    def __len__(self) -> int:
        return len(self._index)

    def append_records(self, records: list[IceObservation]) -> int:
        """Persist new records as one fresh segment; exact duplicates are
        skipped silently, contradictions abort with nothing appended."""
        fresh: list[IceObservation] = []
        batch_seen: dict[tuple[int, str], float] = {}
        for obs in records:
            key = (obs.point_id, format_timestamp(obs.timestamp))
            for prior in (self._index.get(key), batch_seen.get(key)):
                if prior is not None and prior != obs.concentration:
                    raise IntegrityConflictError(
                        f"point {key[0]} at {key[1]}: stored {prior!r} vs new {obs.concentration!r}"
                    )
            if key in self._index or key in batch_seen:
                continue
            batch_seen[key] = obs.concentration
            fresh.append(obs)
        if not fresh:
            return 0
        fresh.sort(key=lambda o: (o.point_id, o.timestamp))

        lock = self.root / LOCK_NAME
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreLockedError(f"store {self.root} is locked by another writer") from None
        try:
            os.close(fd)
            path = self.root / f"{SEGMENT_PREFIX}{len(self._segments) + 1:06d}.txt"
            lines = [STORE_HEADER]
            for obs in fresh:
                text = _record_text(obs)
                lines.append(f"{_checksum(text.encode('ascii'))}\t{text}")
            path.write_text("\n".join(lines) + "\n", encoding="ascii")
        finally:
            lock.unlink()

        self._segments.append(StoreSegment(path, tuple(fresh)))
        for obs in fresh:
            self._index[(obs.point_id, format_timestamp(obs.timestamp))] = obs.concentration
        return len(fresh)

    def query_range(self, query: SeriesQuery) -> list[IceObservation]:
        """All stored records matching the query, ascending by timestamp."""
        everything = [obs for seg in self._segments for obs in seg.records]
        return sort_by_interval(everything, query)

    def verify_integrity(self) -> IntegrityReport:
        """Re-read every segment from disk and recompute every checksum."""
        return verify_store(self.root)


def _segment_paths(root: Path) -> list[Path]:
    return sorted(root.glob(f"{SEGMENT_PREFIX}*.txt"))


def verify_store(root: str | Path) -> IntegrityReport:
    """Checksum sweep over a store directory. Unlike open_store this never
    raises on corruption: every bad line becomes a reported failure."""
    segments = 0
    records = 0
    failures: list[IntegrityFailure] = []
    for path in _segment_paths(Path(root)):
        segments += 1
        for line_no, reason, obs in _scan_segment(path):
            if reason is not None:
                failures.append(IntegrityFailure(path.name, line_no, reason))
            elif obs is not None:
                records += 1
    return IntegrityReport(segments, records, tuple(failures))


def open_store(root: str | Path) -> IceStore:
    """Load all segments under root, verifying every checksum."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    segments = []
    for path in _segment_paths(root):
        records = []
        for line_no, reason, obs in _scan_segment(path):
            if reason is not None:
                raise CorruptionError(f"{path.name}:{line_no}: {reason}")
            records.append(obs)
        ordered = sorted(records, key=lambda o: (o.point_id, o.timestamp))
        if records != ordered:
            raise CorruptionError(f"{path.name}: records out of (point, timestamp) order")
        segments.append(StoreSegment(path, tuple(records)))
    return IceStore(root, segments)
