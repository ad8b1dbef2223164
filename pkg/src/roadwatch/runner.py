"""End-to-end scenario execution and artifact output.

One simulation tick per video frame: every sub station processes its frame,
scheduled operator messages enter the transport, due messages are delivered
(the main station's control replies can cascade within the tick at zero
latency), and the board is re-rendered. After the last frame a settle phase
closes windows due exactly at the scenario end and drains the transport.

Outputs, all byte-deterministic for a given (config, seed):

* ``events.log`` -- one line per occurrence, ``<tick> <KIND> <details>``
  where KIND is SEND, DROP, DELIVER, BOARD, or VIOLATION; message and board
  payloads appear with backslash and LF escaped as ``\\\\`` and ``\\n``.
* ``board.txt``  -- final board render.
* ``flows.csv``  -- every flow sample: road_id,window_index,count,rate.
* ``violations.csv`` and ``viol_<seq>.pgm`` -- the violation store.
* ``frames/<road>/frame_<tick>.pgm`` -- only with dump_frames.
"""

from __future__ import annotations

import os
from pathlib import Path

from . import m2m
from .config import ScenarioConfig, action_tick
from .imaging import render_scene, write_pgm
from .stations import MainStation, SubStation, TransportSim, render_board
from .traffic import FlowSample, ViolationStore

FLOWS_HEADER = "road_id,window_index,count,rate_veh_per_min"


def escape_details(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n")


def unescape_details(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)


class _Run:
    def __init__(self, config: ScenarioConfig, out_dir: Path, dump_frames: bool):
        self.config = config
        self.out_dir = out_dir
        self.dump_frames = dump_frames
        self.events: list[str] = []
        self.flow_rows: list[FlowSample] = []
        self.last_board: str | None = None

        self.store = ViolationStore(out_dir)
        self.scenes = [
            road.scene_config(config.noise_seed_for(i)) for i, road in enumerate(config.roads)
        ]
        self.subs = [
            SubStation(
                station_id=road.station_id,
                road_id=road.road_id,
                main_id=config.main_id,
                geometry=road.geometry(),
                window_s=road.window_s,
                security_code=config.security_code,
                violations=self.store,
                threshold=road.threshold,
                min_area=road.min_area,
                gate_px=road.gate_px,
            )
            for road in config.roads
        ]
        self.sub_by_id = {sub.station_id: sub for sub in self.subs}
        self.main = MainStation(
            station_id=config.main_id,
            road_to_station={road.road_id: road.station_id for road in config.roads},
            security_code=config.security_code,
        )
        self.transport = TransportSim(
            station_ids=[config.main_id, *self.sub_by_id],
            latency_ticks=config.latency_ticks,
            drop_probability=config.drop_probability,
            seed=config.seed,
        )

    def log(self, tick: int, kind: str, details: str) -> None:
        self.events.append(f"{tick} {kind} {escape_details(details)}")

    def send(self, tick: int, msg) -> None:
        wire = m2m.serialize(msg).decode("utf-8")
        self.log(tick, "SEND", wire)
        outcome = self.transport.send(msg)
        if outcome.dropped:
            self.log(tick, "DROP", wire)

    def dispatch(self, delivery, now_s: float) -> None:
        msg = delivery.msg
        self.log(delivery.tick, "DELIVER", m2m.serialize(msg).decode("utf-8"))
        if msg.to_id == self.main.station_id:
            for reply in self.main.handle(msg, now_s):
                self.send(self.transport.tick, reply)
        else:
            sub = self.sub_by_id.get(msg.to_id)
            if sub is not None:
                sub.handle(msg, now_s)

    def deliver_cascade(self, tick: int, now_s: float) -> None:
        while True:
            batch = self.transport.deliver_until(tick)
            if not batch:
                return
            for delivery in batch:
                self.dispatch(delivery, now_s)

    def log_board(self, tick: int) -> None:
        board = render_board(self.main)
        if board != self.last_board:
            self.log(tick, "BOARD", board)
            self.last_board = board

    def tick_result(self, tick: int, result) -> None:
        self.flow_rows.extend(result.samples)
        for record in result.violations:
            self.log(tick, "VIOLATION", record.csv_row())
        for msg in result.messages:
            self.send(tick, msg)


def run_scenario(
    config: ScenarioConfig, out_dir: str | os.PathLike, dump_frames: bool = False
) -> Path:
    """Execute one scenario, writing all artifacts under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(config, out, dump_frames)
    fps = config.fps
    total_ticks = config.duration_s * fps

    actions_at: dict[int, list] = {}
    for action in config.actions:
        actions_at.setdefault(action_tick(action, fps), []).append(action)

    operator_seq = 0
    frame_dirs = {}
    if dump_frames:
        for road in config.roads:
            d = out / "frames" / road.road_id
            d.mkdir(parents=True, exist_ok=True)
            frame_dirs[road.road_id] = d

    for tick in range(total_ticks):
        now_s = tick / fps
        run.transport.advance_to(tick)  # sends this tick schedule from here
        for road, scene, sub in zip(config.roads, run.scenes, run.subs):
            frame = render_scene(scene, tick)
            if dump_frames:
                (frame_dirs[road.road_id] / f"frame_{tick:06d}.pgm").write_bytes(
                    write_pgm(frame)
                )
            run.tick_result(tick, sub.tick(frame, now_s))
        for action in actions_at.get(tick, ()):
            code = action.code if action.code is not None else config.security_code
            if action.kind == m2m.INTERRUPT:
                msg = m2m.make_interrupt(
                    config.operator_id, config.main_id, now_s, operator_seq,
                    code, action.road_id, action.text,
                )
            else:
                msg = m2m.make_resume(
                    config.operator_id, config.main_id, now_s, operator_seq,
                    code, action.road_id,
                )
            operator_seq += 1
            run.send(tick, msg)
        run.deliver_cascade(tick, now_s)
        run.log_board(tick)

    # Settle: close windows ending exactly at duration_s, then drain the wire.
    end_tick = total_ticks
    end_s = total_ticks / fps
    run.transport.advance_to(end_tick)
    for sub in run.subs:
        run.tick_result(end_tick, sub.settle(end_s))
    run.deliver_cascade(end_tick, end_s)
    run.log_board(end_tick)
    while run.transport.pending:
        tick = run.transport.next_delivery_tick()
        run.deliver_cascade(tick, tick / fps)
        run.log_board(tick)

    run.store.close()
    (out / "events.log").write_text(
        "".join(line + "\n" for line in run.events), encoding="utf-8"
    )
    (out / "board.txt").write_text(render_board(run.main), encoding="utf-8")
    flow_lines = [FLOWS_HEADER] + [
        f"{s.road_id},{s.window_index},{s.count},{s.rate_veh_per_min:.2f}"
        for s in run.flow_rows
    ]
    (out / "flows.csv").write_text(
        "".join(line + "\n" for line in flow_lines), encoding="utf-8"
    )
    return out
