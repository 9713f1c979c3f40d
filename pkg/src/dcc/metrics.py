"""Engineering KPI computations over commit-history logs.

History is a neutral JSON-lines log, one record per line, timestamps
ISO-8601 UTC.  Every operation here is pure over its input records;
record order never changes a result.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import ParseError

PATH_KINDS = ("internal", "open")


def parse_instant(raw: str) -> datetime:
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as e:
        raise ParseError(f"bad timestamp {raw!r}: {e}") from e
    if ts.tzinfo is None:
        raise ParseError(f"timestamp {raw!r} must carry a UTC offset")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_instant(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class CommitRecord:
    id: str
    timestamp: datetime
    path_kind: str
    files: tuple[str, ...]
    merged_at: datetime | None = None

    def __post_init__(self):
        if self.path_kind not in PATH_KINDS:
            raise ParseError(f"commit {self.id!r}: path_kind must be one of {PATH_KINDS}")
        if self.merged_at is not None and self.merged_at < self.timestamp:
            raise ParseError(f"commit {self.id!r}: merged_at precedes timestamp")

    @classmethod
    def from_data(cls, data: dict) -> "CommitRecord":
        try:
            return cls(
                id=str(data["id"]),
                timestamp=parse_instant(data["timestamp"]),
                path_kind=data["path_kind"],
                files=tuple(data.get("files", [])),
                merged_at=parse_instant(data["merged_at"]) if data.get("merged_at") else None,
            )
        except KeyError as e:
            raise ParseError(f"commit record missing key {e}") from e

    def to_data(self) -> dict:
        out = {
            "id": self.id,
            "timestamp": format_instant(self.timestamp),
            "path_kind": self.path_kind,
            "files": list(self.files),
        }
        if self.merged_at is not None:
            out["merged_at"] = format_instant(self.merged_at)
        return out


def read_history(text: str) -> list[CommitRecord]:
    """Parse JSON-lines history; unknown extra keys (e.g. an attached
    patch) are tolerated so one log can feed several tools."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"history line {lineno}: {e}") from e
        records.append(CommitRecord.from_data(data))
    return records


def late_commit_ratio(history: list[CommitRecord], milestones: list[datetime],
                      window_days: float = 14.0) -> float:
    """Fraction of commits landing within the pre-milestone window of
    any milestone.  A commit inside two overlapping windows counts once."""
    if not history:
        return 0.0
    window = timedelta(days=window_days)
    late = 0
    for record in history:
        if any(m - window <= record.timestamp <= m for m in milestones):
            late += 1
    return late / len(history)


@dataclass(frozen=True)
class MergeLagStats:
    mean_sec: float | None
    median_sec: float | None
    max_sec: float | None
    merged_count: int
    unmerged_count: int

    def to_data(self) -> dict:
        return {"mean_sec": self.mean_sec, "median_sec": self.median_sec,
                "max_sec": self.max_sec, "merged_count": self.merged_count,
                "unmerged_count": self.unmerged_count}


def merge_lag(history: list[CommitRecord]) -> MergeLagStats:
    """Lag between a commit and its landing on the other development path."""
    lags = [
        (r.merged_at - r.timestamp).total_seconds()
        for r in history if r.merged_at is not None
    ]
    unmerged = len(history) - len(lags)
    if not lags:
        return MergeLagStats(None, None, None, 0, unmerged)
    return MergeLagStats(statistics.fmean(lags), statistics.median(lags),
                         max(lags), len(lags), unmerged)
