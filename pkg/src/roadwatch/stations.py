"""The two station roles as state machines over a simulated transport.

A sub-roadway station turns frames into flow counts and FLOW messages and
obeys authed PAUSE/RESUME control. The main-roadway station keeps one
display slot per road, applies operator interrupts (forwarding a PAUSE to
the affected sub station), and deduplicates by per-sender sequence number.
The transport delivers messages after a fixed tick latency, dropping each
with a seeded Bernoulli draw decided at send time, so whole scenarios are
reproducible from (config, seed).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import m2m
from .imaging import Frame
from .m2m import M2MMessage, verify_auth
from .tracking import LaneGeometry, LineCrossingTracker
from .traffic import (
    FlowSample,
    FlowWindow,
    ViolationRecord,
    ViolationStore,
    check_violation,
    close_window,
    record_passage,
)
from .vision import DEFAULT_MIN_AREA, DEFAULT_THRESHOLD, extract_blobs, motion_mask

MODE_EMPTY = "EMPTY"
MODE_FLOW = "FLOW"
MODE_OVERRIDE = "OVERRIDE"


@dataclass
class TickResult:
    """Everything one sub-station tick produced."""

    messages: list[M2MMessage]
    samples: list[FlowSample]
    violations: list[ViolationRecord]


class SubStation:
    """Sensing node for one road: vision pipeline, flow window, pause flag."""

    def __init__(
        self,
        station_id: str,
        road_id: str,
        main_id: str,
        geometry: LaneGeometry,
        window_s: int,
        security_code: str,
        violations: ViolationStore,
        threshold: int = DEFAULT_THRESHOLD,
        min_area: int = DEFAULT_MIN_AREA,
        gate_px: float = 20.0,
    ) -> None:
        self.station_id = station_id
        self.road_id = road_id
        self.main_id = main_id
        self.geometry = geometry
        self.security_code = security_code
        self.violations = violations
        self.threshold = threshold
        self.min_area = min_area
        self.paused = False
        self.tracker = LineCrossingTracker(geometry, gate_px=gate_px)
        self.window = FlowWindow(road_id=road_id, window_s=window_s)
        self.prev_frame: Frame | None = None
        self.next_seq = 0
        self._frame_index = 0

    def _emit_flow(self, sample: FlowSample, now_s: float) -> M2MMessage:
        msg = m2m.make_flow(self.station_id, self.main_id, now_s, self.next_seq, sample)
        self.next_seq += 1
        return msg

    def _close_due_windows(self, now_s: float) -> list[FlowSample]:
        samples = []
        while self.window.end_s <= now_s:
            sample, self.window = close_window(self.window)
            samples.append(sample)
        return samples

    def tick(self, frame: Frame, now_s: float) -> TickResult:
        """Process one frame at ``now_s`` (frame_index / fps).

        While paused only the reference frame updates, so resuming never
        produces a spurious whole-vehicle motion artifact; no windows close
        and no FLOW is ever emitted. Otherwise runs the motion pipeline,
        records B-crossings into the flow window, closes every window due by
        ``now_s``, and logs a violation (with a snapshot of the current
        frame) for each over-limit average speed.
        """
        frame_index = self._frame_index
        self._frame_index += 1
        if self.paused:
            self.prev_frame = frame
            return TickResult([], [], [])

        result = TickResult([], [], [])
        events = []
        if self.prev_frame is not None:
            mask = motion_mask(self.prev_frame, frame, self.threshold)
            blobs = extract_blobs(mask, self.min_area)
            events = self.tracker.step(blobs, frame_index)
        self.prev_frame = frame

        samples: list[FlowSample] = []
        for event in events:
            if event.line != "B":
                continue
            self.window, emitted = record_passage(self.window, event.time_s)
            samples.extend(emitted)
            if event.interpolated_speed_mps is not None:
                record = check_violation(
                    event.interpolated_speed_mps,
                    self.geometry.speed_limit_mps,
                    record_seq=self.violations.size,
                    road_id=self.road_id,
                    track_id=event.track_id,
                    timestamp_s=event.time_s,
                    snapshot_ref=self.violations.next_snapshot_ref(),
                )
                if record is not None:
                    self.violations.append(record, frame)
                    result.violations.append(record)
        samples.extend(self._close_due_windows(now_s))

        result.samples = samples
        result.messages = [self._emit_flow(s, now_s) for s in samples]
        return result

    def settle(self, now_s: float) -> TickResult:
        """Close windows due at end of scenario without processing a frame."""
        if self.paused:
            return TickResult([], [], [])
        samples = self._close_due_windows(now_s)
        return TickResult([self._emit_flow(s, now_s) for s in samples], samples, [])

    def handle(self, msg: M2MMessage, now_s: float) -> None:
        """Obey authed PAUSE/RESUME addressed to this station; drop the rest.

        A valid RESUME restarts the current window empty: counts during the
        pause never existed, so a backfilled partial window would report a
        falsely low rate.
        """
        if msg.to_id != self.station_id:
            return
        if msg.kind == m2m.PAUSE and verify_auth(msg, self.security_code):
            self.paused = True
            # identities cannot be carried across the monitoring gap
            self.tracker.clear_tracks()
        elif msg.kind == m2m.RESUME and verify_auth(msg, self.security_code):
            self.paused = False
            self.window = FlowWindow(
                road_id=self.road_id,
                window_s=self.window.window_s,
                window_index=int(now_s // self.window.window_s),
            )


@dataclass
class DisplaySlot:
    """One road's line on the display board."""

    mode: str = MODE_EMPTY
    rate_veh_per_min: float | None = None
    as_of_s: float | None = None
    override_text: str | None = None


class MainStation:
    """Display node: aggregates FLOW messages, applies operator interrupts."""

    def __init__(
        self,
        station_id: str,
        road_to_station: dict[str, str],
        security_code: str,
    ) -> None:
        self.station_id = station_id
        self.road_to_station = dict(road_to_station)
        self.security_code = security_code
        self.slots: dict[str, DisplaySlot] = {road: DisplaySlot() for road in road_to_station}
        self.last_seq_seen: dict[str, int] = {}
        self.next_seq = 0

    def _control_reply(self, kind: str, road_id: str, now_s: float) -> list[M2MMessage]:
        maker = m2m.make_pause if kind == m2m.PAUSE else m2m.make_resume
        dest = self.road_to_station[road_id]
        msg = maker(self.station_id, dest, now_s, self.next_seq, self.security_code, road_id)
        self.next_seq += 1
        return [msg]

    def handle(self, msg: M2MMessage, now_s: float) -> list[M2MMessage]:
        """Apply one delivered message; returns any control messages to send.

        Stale or duplicate sequence numbers, unknown roads, wrong auth codes,
        and kinds the main station does not consume are all ignored without
        any observable state change.
        """
        if msg.to_id != self.station_id:
            return []
        last = self.last_seq_seen.get(msg.from_id)
        if last is not None and msg.seq <= last:
            return []

        road_id = msg.body.road_id
        if msg.kind == m2m.FLOW:
            slot = self.slots.get(road_id)
            if slot is None:
                slot = self.slots[road_id] = DisplaySlot()
            slot.rate_veh_per_min = msg.body.rate_veh_per_min
            slot.as_of_s = msg.date_s
            # An active override keeps the board ("displayed instead of the
            # traffic flow rate") but the stored rate stays fresh for later.
            if slot.mode != MODE_OVERRIDE:
                slot.mode = MODE_FLOW
            self.last_seq_seen[msg.from_id] = msg.seq
            return []

        if msg.kind == m2m.INTERRUPT:
            if not verify_auth(msg, self.security_code) or road_id not in self.road_to_station:
                return []
            slot = self.slots[road_id]
            slot.mode = MODE_OVERRIDE
            slot.override_text = msg.body.text
            self.last_seq_seen[msg.from_id] = msg.seq
            return self._control_reply(m2m.PAUSE, road_id, now_s)

        if msg.kind == m2m.RESUME:
            if not verify_auth(msg, self.security_code) or road_id not in self.road_to_station:
                return []
            slot = self.slots[road_id]
            slot.override_text = None
            slot.mode = MODE_FLOW if slot.rate_veh_per_min is not None else MODE_EMPTY
            self.last_seq_seen[msg.from_id] = msg.seq
            return self._control_reply(m2m.RESUME, road_id, now_s)

        return []  # PAUSE is never addressed to the main station


def render_board(station: MainStation) -> str:
    """Deterministic board text, one line per road in lexicographic order."""
    lines = []
    for road_id in sorted(station.slots):
        slot = station.slots[road_id]
        if slot.mode == MODE_OVERRIDE:
            lines.append(f"ROAD {road_id}: {slot.override_text}")
        elif slot.mode == MODE_FLOW:
            lines.append(
                f"ROAD {road_id}: {slot.rate_veh_per_min:.2f} veh/min"
                f" (as of {slot.as_of_s:.3f} s)"
            )
        else:
            lines.append(f"ROAD {road_id}: --")
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class SendOutcome:
    dropped: bool
    delivery_tick: int | None  # None when dropped


@dataclass(frozen=True)
class Delivery:
    tick: int
    msg: M2MMessage


class TransportSim:
    """Store-and-forward network with fixed latency and seeded random drops.

    Each send draws once from the RNG (even at drop probability 0), so the
    delivery schedule is a pure function of the seed and the send order.
    Per (sender, receiver) pair the fixed latency preserves send order.
    """

    def __init__(
        self,
        station_ids: list[str],
        latency_ticks: int = 0,
        drop_probability: float = 0.0,
        seed: int = 0,
    ) -> None:
        if latency_ticks < 0:
            raise ValueError("latency_ticks must be >= 0")
        if not 0.0 <= drop_probability <= 1.0:
            raise ValueError("drop_probability must lie in [0, 1]")
        self.station_ids = set(station_ids)
        self.latency_ticks = latency_ticks
        self.drop_probability = drop_probability
        self.tick = 0
        self._rng = random.Random(seed)
        self._in_flight: list[tuple[int, int, M2MMessage]] = []
        self._send_count = 0

    def advance_to(self, tick: int) -> None:
        """Move the clock forward without collecting deliveries."""
        if tick < self.tick:
            raise ValueError("transport tick must not go backwards")
        self.tick = tick

    def send(self, msg: M2MMessage) -> SendOutcome:
        """Schedule a message; the drop decision is made now, at send time."""
        if msg.to_id not in self.station_ids:
            raise ValueError(f"unknown destination mailbox {msg.to_id!r}")
        dropped = self._rng.random() < self.drop_probability
        self._send_count += 1
        if dropped:
            return SendOutcome(dropped=True, delivery_tick=None)
        delivery_tick = self.tick + self.latency_ticks
        self._in_flight.append((delivery_tick, self._send_count, msg))
        return SendOutcome(dropped=False, delivery_tick=delivery_tick)

    def deliver_until(self, tick: int) -> list[Delivery]:
        """Advance to ``tick`` and return every due message in order."""
        self.advance_to(tick)
        due = sorted(item for item in self._in_flight if item[0] <= tick)
        self._in_flight = [item for item in self._in_flight if item[0] > tick]
        return [Delivery(tick=d, msg=m) for d, _, m in due]

    @property
    def pending(self) -> int:
        return len(self._in_flight)

    def next_delivery_tick(self) -> int | None:
        if not self._in_flight:
            return None
        return min(item[0] for item in self._in_flight)
