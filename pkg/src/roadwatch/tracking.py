"""Blob-to-track association, virtual-line crossings, and speed estimates.

Two virtual pixel rows (line A above line B) are a known physical distance
apart; a track's interpolated crossing instants give its travel time and
hence its average speed. The per-frame speed estimate is advisory only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .vision import Blob

BEFORE_A = "BeforeA"
BETWEEN_AB = "BetweenAB"
PAST_B = "PastB"

DEFAULT_GATE_PX = 20.0
DEFAULT_MISS_LIMIT = 3

EMA_ALPHA = 0.5


@dataclass(frozen=True)
class LaneGeometry:
    """Camera-view geometry of one monitored lane.

    ``distance_m`` is the real-world spacing between the two virtual lines;
    the derived meters-per-pixel scale is assumed linear between them.
    """

    y_a: int
    y_b: int
    distance_m: float
    fps: int
    speed_limit_mps: float

    def __post_init__(self):
        if self.y_b <= self.y_a:
            raise ValueError("line B must lie below line A (y_b > y_a)")
        if self.distance_m <= 0:
            raise ValueError("distance_m must be > 0")
        if self.fps < 1:
            raise ValueError("fps must be >= 1")
        if self.speed_limit_mps <= 0:
            raise ValueError("speed_limit_mps must be > 0")

    @property
    def meters_per_px(self) -> float:
        return self.distance_m / (self.y_b - self.y_a)


@dataclass
class Track:
    """One identity-carrying trajectory through the camera view."""

    id: int
    centroid_history: list[tuple[int, float, float]]  # (frame_index, cx, cy)
    phase: str
    t_cross_a: float | None = None
    t_cross_b: float | None = None
    misses: int = 0

    @property
    def last(self) -> tuple[int, float, float]:
        return self.centroid_history[-1]


@dataclass(frozen=True)
class CrossingEvent:
    """A track's centroid passing line A or line B."""

    track_id: int
    line: str  # "A" or "B"
    time_s: float
    interpolated_speed_mps: float | None = None  # set on B when t_AB is known


def associate(
    tracks: list[Track], blobs: list[Blob], gate_px: float = DEFAULT_GATE_PX
) -> tuple[list[tuple[int, int]], list[int]]:
    """Greedy nearest-centroid matching between live tracks and new blobs.

    Candidate pairs within ``gate_px`` are taken in ascending distance order
    (ties broken by track index, then blob index); each track and each blob
    is used at most once. Returns (matches, unmatched_blob_indices) where
    matches are (track_index, blob_index) pairs.
    """
    if gate_px <= 0:
        raise ValueError("gate_px must be > 0")
    gate2 = gate_px * gate_px
    pairs = []
    for ti, track in enumerate(tracks):
        _, tx, ty = track.last
        for bi, blob in enumerate(blobs):
            bx, by = blob.centroid
            d2 = (tx - bx) ** 2 + (ty - by) ** 2
            if d2 <= gate2:
                pairs.append((d2, ti, bi))
    pairs.sort()
    matched: list[tuple[int, int]] = []
    used_t: set[int] = set()
    used_b: set[int] = set()
    for _, ti, bi in pairs:
        if ti in used_t or bi in used_b:
            continue
        matched.append((ti, bi))
        used_t.add(ti)
        used_b.add(bi)
    unmatched = [bi for bi in range(len(blobs)) if bi not in used_b]
    return matched, unmatched


def detect_crossing(
    prev: tuple[int, float],
    curr: tuple[int, float],
    line_y: float,
    fps: int,
) -> float | None:
    """Sub-frame crossing instant of a horizontal line, or None.

    ``prev`` and ``curr`` are (frame_index, cy) for consecutive frames. A
    crossing happens when prev.cy < line_y <= curr.cy; the instant is linearly
    interpolated between the two frames and returned in seconds.
    """
    (f0, y0), (f1, y1) = prev, curr
    if f1 != f0 + 1:
        raise ValueError("detect_crossing expects consecutive frame indices")
    if not (y0 < line_y <= y1):
        return None
    return (f0 + (line_y - y0) / (y1 - y0)) / fps


def average_speed(t_cross_a: float, t_cross_b: float, distance_m: float) -> float:
    """Average speed over the known distance: distance / (t_b - t_a)."""
    dt = t_cross_b - t_cross_a
    if dt <= 0:
        raise ValueError(f"non-positive travel time {dt}")
    return distance_m / dt


def instantaneous_speed(track: Track, geometry: LaneGeometry) -> float | None:
    """Advisory in-path speed: EMA (alpha 0.5) of per-frame centroid steps.

    Only spans between consecutively matched frames contribute; returns None
    when the history contains no such span.
    """
    ema = None
    hist = track.centroid_history
    for (f0, _, y0), (f1, _, y1) in zip(hist, hist[1:]):
        if f1 != f0 + 1:
            continue
        v = (y1 - y0) * geometry.fps * geometry.meters_per_px
        ema = v if ema is None else EMA_ALPHA * v + (1 - EMA_ALPHA) * ema
    return ema


def _interp_crossing_time(
    prev: tuple[int, float], curr: tuple[int, float], line_y: float, fps: int
) -> float | None:
    """detect_crossing generalized across a short gap of missed frames."""
    (f0, y0), (f1, y1) = prev, curr
    if not (y0 < line_y <= y1):
        return None
    return (f0 + (line_y - y0) / (y1 - y0) * (f1 - f0)) / fps


def _phase_for(cy: float, geometry: LaneGeometry) -> str:
    if cy < geometry.y_a:
        return BEFORE_A
    if cy < geometry.y_b:
        return BETWEEN_AB
    return PAST_B


class LineCrossingTracker:
    """Associates blobs frame by frame and emits line-crossing events.

    Each track emits at most one A event and one B event, in that order; the
    B event carries the average speed when both crossing times are known
    (a track first seen between the lines crosses B with no speed). Tracks
    are retired after ``miss_limit`` consecutive unmatched frames. Track ids
    are assigned in creation order starting at 0.
    """

    def __init__(
        self,
        geometry: LaneGeometry,
        gate_px: float = DEFAULT_GATE_PX,
        miss_limit: int = DEFAULT_MISS_LIMIT,
    ) -> None:
        if miss_limit < 1:
            raise ValueError("miss_limit must be >= 1")
        self.geometry = geometry
        self.gate_px = gate_px
        self.miss_limit = miss_limit
        self.tracks: list[Track] = []
        self.next_id = 0
        self.last_frame_index: int | None = None

    def clear_tracks(self) -> None:
        """Forget every live track; identities across a monitoring gap are
        unknowable, so callers that suspend processing start fresh."""
        self.tracks = []

    def step(self, blobs: list[Blob], frame_index: int) -> list[CrossingEvent]:
        """Advance one frame; returns this frame's crossing events."""
        if self.last_frame_index is not None and frame_index <= self.last_frame_index:
            raise ValueError(
                f"frame_index must increase (got {frame_index} after {self.last_frame_index})"
            )
        self.last_frame_index = frame_index
        geom = self.geometry

        matches, unmatched_blobs = associate(self.tracks, blobs, self.gate_px)
        events: list[CrossingEvent] = []
        matched_tracks = set()
        for ti, bi in sorted(matches):  # track order keeps event order stable
            track = self.tracks[ti]
            matched_tracks.add(ti)
            f_prev, _, cy_prev = track.last
            cx, cy = blobs[bi].centroid
            track.centroid_history.append((frame_index, cx, cy))
            track.misses = 0
            if frame_index - f_prev > self.miss_limit:
                # a gap this long means the track should already have been
                # retired; never interpolate a crossing across it
                continue
            if track.phase == BEFORE_A:
                t = _interp_crossing_time((f_prev, cy_prev), (frame_index, cy), geom.y_a, geom.fps)
                if t is not None:
                    track.t_cross_a = t
                    track.phase = BETWEEN_AB
                    events.append(CrossingEvent(track.id, "A", t))
            if track.phase == BETWEEN_AB:
                t = _interp_crossing_time((f_prev, cy_prev), (frame_index, cy), geom.y_b, geom.fps)
                if t is not None:
                    track.t_cross_b = t
                    track.phase = PAST_B
                    speed = None
                    if track.t_cross_a is not None:
                        speed = average_speed(track.t_cross_a, t, geom.distance_m)
                    events.append(CrossingEvent(track.id, "B", t, speed))

        survivors = []
        for ti, track in enumerate(self.tracks):
            if ti in matched_tracks:
                survivors.append(track)
                continue
            track.misses += 1
            if track.misses < self.miss_limit:
                survivors.append(track)
        self.tracks = survivors

        for bi in unmatched_blobs:
            cx, cy = blobs[bi].centroid
            self.tracks.append(
                Track(
                    id=self.next_id,
                    centroid_history=[(frame_index, cx, cy)],
                    phase=_phase_for(cy, geom),
                )
            )
            self.next_id += 1

        events.sort(key=lambda e: (e.time_s, e.track_id, e.line))
        return events
