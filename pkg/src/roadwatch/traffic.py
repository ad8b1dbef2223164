"""Flow-rate aggregation over fixed windows and the speeding-violation store.

A window of ``window_s`` seconds counts vehicles passing line B; when it
elapses, the count is converted to vehicles per minute and the counter
resets. Windows are half-open [k*t, (k+1)*t): an event exactly on a boundary
belongs to the later window. Elapsed empty windows still emit samples so the
display never goes stale.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

from .imaging import Frame, write_pgm

REGISTRATION_PLACEHOLDER = "UNAVAILABLE"

VIOLATIONS_CSV = "violations.csv"
VIOLATIONS_HEADER = "seq,road_id,track_id,timestamp_s,speed_mps,limit_mps,snapshot,registration"


@dataclass(frozen=True)
class FlowWindow:
    """Per-interval vehicle counter for one road."""

    road_id: str
    window_s: int
    window_index: int = 0
    count: int = 0

    def __post_init__(self):
        if self.window_s < 1:
            raise ValueError("window_s must be >= 1")
        if self.window_index < 0 or self.count < 0:
            raise ValueError("window_index and count must be >= 0")

    @property
    def start_s(self) -> float:
        return self.window_index * self.window_s

    @property
    def end_s(self) -> float:
        return (self.window_index + 1) * self.window_s


@dataclass(frozen=True)
class FlowSample:
    """One closed window's result: count and vehicles-per-minute rate."""

    road_id: str
    window_index: int
    count: int
    rate_veh_per_min: float
    window_s: int


def close_window(window: FlowWindow) -> tuple[FlowSample, FlowWindow]:
    """Close the current window: emit its sample, reset the count, advance."""
    sample = FlowSample(
        road_id=window.road_id,
        window_index=window.window_index,
        count=window.count,
        rate_veh_per_min=window.count * 60 / window.window_s,
        window_s=window.window_s,
    )
    return sample, replace(window, window_index=window.window_index + 1, count=0)


def record_passage(
    window: FlowWindow, event_time_s: float
) -> tuple[FlowWindow, list[FlowSample]]:
    """Count one passage at ``event_time_s``.

    If the event falls past the current window, every elapsed window (empty
    ones included) is closed and its sample emitted before the count restarts
    in the event's window. Events before the current window start are a
    caller error: passages must be recorded in nondecreasing time order.
    """
    target = int(event_time_s // window.window_s)
    if target < window.window_index:
        raise ValueError(
            f"event at {event_time_s}s precedes current window start {window.start_s}s"
        )
    samples = []
    while window.window_index < target:
        sample, window = close_window(window)
        samples.append(sample)
    return replace(window, count=window.count + 1), samples


@dataclass(frozen=True)
class ViolationRecord:
    """One over-the-limit passage, as persisted to the violation store."""

    record_seq: int
    road_id: str
    track_id: int
    timestamp_s: float
    speed_mps: float
    limit_mps: float
    snapshot_ref: str
    registration: str = REGISTRATION_PLACEHOLDER

    def __post_init__(self):
        if self.speed_mps <= self.limit_mps:
            raise ValueError("violation requires speed_mps > limit_mps")
        if not self.snapshot_ref:
            raise ValueError("snapshot_ref must be non-empty")

    def csv_row(self) -> str:
        return (
            f"{self.record_seq},{self.road_id},{self.track_id},"
            f"{self.timestamp_s:.3f},{self.speed_mps:.3f},{self.limit_mps:.3f},"
            f"{self.snapshot_ref},{self.registration}"
        )


def check_violation(
    speed_mps: float,
    limit_mps: float,
    *,
    record_seq: int,
    road_id: str,
    track_id: int,
    timestamp_s: float,
    snapshot_ref: str,
) -> ViolationRecord | None:
    """A ViolationRecord iff the speed strictly exceeds the limit."""
    if speed_mps < 0:
        raise ValueError("speed_mps must be >= 0")
    if limit_mps <= 0:
        raise ValueError("limit_mps must be > 0")
    if speed_mps <= limit_mps:
        return None
    return ViolationRecord(
        record_seq=record_seq,
        road_id=road_id,
        track_id=track_id,
        timestamp_s=timestamp_s,
        speed_mps=speed_mps,
        limit_mps=limit_mps,
        snapshot_ref=snapshot_ref,
    )


class ViolationStore:
    """Append-only violation log: one CSV line plus one PGM snapshot each.

    ``violations.csv`` is created with its header immediately and lines are
    flushed as they are appended; a persisted line is never rewritten.
    """

    def __init__(self, out_dir: str | os.PathLike) -> None:
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.records: list[ViolationRecord] = []
        self._csv = open(self.out_dir / VIOLATIONS_CSV, "w", encoding="utf-8", newline="")
        self._csv.write(VIOLATIONS_HEADER + "\n")
        self._csv.flush()

    @property
    def size(self) -> int:
        return len(self.records)

    def next_snapshot_ref(self) -> str:
        return f"viol_{self.size}.pgm"

    def append(self, record: ViolationRecord, snapshot: Frame) -> None:
        """Persist one record; its seq must equal the current store length."""
        if record.record_seq != self.size:
            raise ValueError(
                f"sequence gap: record seq {record.record_seq}, store length {self.size}"
            )
        (self.out_dir / record.snapshot_ref).write_bytes(write_pgm(snapshot))
        self._csv.write(record.csv_row() + "\n")
        self._csv.flush()
        self.records.append(record)

    def close(self) -> None:
        if not self._csv.closed:
            self._csv.close()

    def __enter__(self) -> "ViolationStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
