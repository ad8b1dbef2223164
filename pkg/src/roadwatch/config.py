"""Scenario configuration: a flat plain-text format, parsed strictly.

Grammar: full-line ``#`` comments, blank lines, ``key = value`` pairs, and
section headers ``[road <id>]`` / ``[action]``. Keys before the first section
are global. ``vehicle`` may repeat inside a road section; every other key may
appear once per section. Unknown keys are errors, and every error names the
offending line. See the README for the full key table and defaults.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

from .imaging import DEFAULT_FPS, DEFAULT_HEIGHT, DEFAULT_WIDTH, SceneConfig, VehicleSpec
from .m2m import INTERRUPT, MAX_TEXT_LEN, RESUME, is_valid_auth, is_valid_id
from .tracking import DEFAULT_GATE_PX, LaneGeometry
from .vision import DEFAULT_MIN_AREA, DEFAULT_THRESHOLD

DEFAULT_MAIN_ID = "main"
DEFAULT_OPERATOR_ID = "operator"
DEFAULT_BACKGROUND = 32


class ConfigError(ValueError):
    """Raised for any malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class ActionSpec:
    """A scheduled operator message (INTERRUPT or RESUME) to the main station."""

    at_s: float
    kind: str
    road_id: str
    text: str = ""
    code: str | None = None  # None means the scenario security code


@dataclass(frozen=True)
class RoadConfig:
    """One sub-roadway: its synthetic scene, lane geometry, and pipeline knobs."""

    road_id: str
    y_a: int
    y_b: int
    distance_m: float
    speed_limit_mps: float
    window_s: int
    station_id: str
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    fps: int = DEFAULT_FPS
    background_level: int = DEFAULT_BACKGROUND
    noise_amplitude: int = 0
    noise_seed: int | None = None  # None derives from the scenario seed
    threshold: int = DEFAULT_THRESHOLD
    min_area: int = DEFAULT_MIN_AREA
    gate_px: float = DEFAULT_GATE_PX
    vehicles: tuple[VehicleSpec, ...] = field(default_factory=tuple)

    def scene_config(self, fallback_noise_seed: int) -> SceneConfig:
        seed = self.noise_seed if self.noise_seed is not None else fallback_noise_seed
        return SceneConfig(
            width=self.width,
            height=self.height,
            fps=self.fps,
            background_level=self.background_level,
            noise_amplitude=self.noise_amplitude,
            noise_seed=seed,
            vehicles=self.vehicles,
        )

    def geometry(self) -> LaneGeometry:
        return LaneGeometry(
            y_a=self.y_a,
            y_b=self.y_b,
            distance_m=self.distance_m,
            fps=self.fps,
            speed_limit_mps=self.speed_limit_mps,
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """A full scenario: global knobs plus per-road sections and actions."""

    duration_s: int
    security_code: str
    roads: tuple[RoadConfig, ...]
    actions: tuple[ActionSpec, ...] = field(default_factory=tuple)
    seed: int = 0
    latency_ticks: int = 0
    drop_probability: float = 0.0
    main_id: str = DEFAULT_MAIN_ID
    operator_id: str = DEFAULT_OPERATOR_ID

    @property
    def fps(self) -> int:
        return self.roads[0].fps

    def road(self, road_id: str) -> RoadConfig:
        for r in self.roads:
            if r.road_id == road_id:
                return r
        raise ConfigError(f"unknown road id {road_id!r}")

    def noise_seed_for(self, road_index: int) -> int:
        road = self.roads[road_index]
        return road.noise_seed if road.noise_seed is not None else self.seed + road_index


_SECTION_RE = re.compile(r"\[(?P<body>[^\]]*)\]")

_GLOBAL_KEYS = {
    "seed": int,
    "duration_s": int,
    "latency_ticks": int,
    "drop_probability": float,
    "security_code": str,
    "main_id": str,
    "operator_id": str,
}
_ROAD_KEYS = {
    "station_id": str,
    "width": int,
    "height": int,
    "fps": int,
    "background_level": int,
    "noise_amplitude": int,
    "noise_seed": int,
    "y_a": int,
    "y_b": int,
    "distance_m": float,
    "speed_limit_mps": float,
    "window_s": int,
    "threshold": int,
    "min_area": int,
    "gate_px": float,
    "vehicle": str,
}
_ACTION_KEYS = {"at_s": float, "kind": str, "road": str, "text": str, "code": str}

_ROAD_REQUIRED = ("y_a", "y_b", "distance_m", "speed_limit_mps", "window_s")
_GLOBAL_REQUIRED = ("duration_s", "security_code")
_ACTION_REQUIRED = ("at_s", "kind", "road")


def _convert(key: str, value: str, typ, lineno: int):
    if typ is str:
        return value
    try:
        return typ(value)
    except ValueError:
        raise ConfigError(
            f"line {lineno}: key {key!r} needs a {typ.__name__}, got {value!r}"
        ) from None


def _parse_vehicle(value: str, lineno: int) -> VehicleSpec:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 7:
        raise ConfigError(
            f"line {lineno}: vehicle needs 7 comma-separated fields "
            "(spawn_frame,speed_px_per_frame,x0,y0,w,h,intensity)"
        )
    try:
        spawn, speed = int(parts[0]), float(parts[1])
        x0, y0, w, h, intensity = (int(p) for p in parts[2:])
    except ValueError:
        raise ConfigError(f"line {lineno}: malformed vehicle numbers in {value!r}") from None
    try:
        return VehicleSpec(spawn, speed, x0, y0, w, h, intensity)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: {exc}") from None


class _Section:
    def __init__(self, kind: str, name: str | None, lineno: int):
        self.kind = kind  # "global" | "road" | "action"
        self.name = name
        self.lineno = lineno
        self.values: dict[str, object] = {}
        self.vehicles: list[VehicleSpec] = []

    def set(self, key: str, value, lineno: int) -> None:
        if key in self.values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        self.values[key] = value


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario; raises ConfigError otherwise."""
    sections = [_Section("global", None, 0)]
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.fullmatch(line)
        if m:
            body = m["body"].strip()
            if body == "action":
                sections.append(_Section("action", None, lineno))
            elif body.startswith("road "):
                road_id = body[len("road "):].strip()
                if not is_valid_id(road_id):
                    raise ConfigError(f"line {lineno}: bad road id {road_id!r}")
                sections.append(_Section("road", road_id, lineno))
            else:
                raise ConfigError(f"line {lineno}: unknown section {line!r}")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        section = sections[-1]
        tables = {"global": _GLOBAL_KEYS, "road": _ROAD_KEYS, "action": _ACTION_KEYS}
        table = tables[section.kind]
        if key not in table:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in {section.kind} section")
        if section.kind == "road" and key == "vehicle":
            section.vehicles.append(_parse_vehicle(value, lineno))
        else:
            section.set(key, _convert(key, value, table[key], lineno), lineno)

    return _build(sections)


def _require(section: _Section, keys, what: str) -> None:
    for key in keys:
        if key not in section.values:
            raise ConfigError(f"{what} (line {section.lineno}): missing required key {key!r}")


def _build(sections: list[_Section]) -> ScenarioConfig:
    top = sections[0]
    _require(top, _GLOBAL_REQUIRED, "global section")
    g = top.values

    roads: list[RoadConfig] = []
    actions: list[ActionSpec] = []
    seen_roads: set[str] = set()
    for section in sections[1:]:
        if section.kind == "road":
            if section.name in seen_roads:
                raise ConfigError(f"line {section.lineno}: duplicate road id {section.name!r}")
            seen_roads.add(section.name)
            _require(section, _ROAD_REQUIRED, f"[road {section.name}]")
            v = dict(section.values)
            v.setdefault("station_id", f"sub-{section.name}")
            try:
                road = RoadConfig(
                    road_id=section.name, vehicles=tuple(section.vehicles), **v
                )
                road.scene_config(0)  # validates scene invariants
                road.geometry()
            except ValueError as exc:
                raise ConfigError(f"[road {section.name}]: {exc}") from None
            roads.append(road)
        else:
            _require(section, _ACTION_REQUIRED, "[action]")
            v = section.values
            actions.append(
                ActionSpec(
                    at_s=v["at_s"],
                    kind=v["kind"],
                    road_id=v["road"],
                    text=v.get("text", ""),
                    code=v.get("code"),
                )
            )

    config = ScenarioConfig(
        duration_s=g["duration_s"],
        security_code=g["security_code"],
        roads=tuple(roads),
        actions=tuple(actions),
        seed=g.get("seed", 0),
        latency_ticks=g.get("latency_ticks", 0),
        drop_probability=g.get("drop_probability", 0.0),
        main_id=g.get("main_id", DEFAULT_MAIN_ID),
        operator_id=g.get("operator_id", DEFAULT_OPERATOR_ID),
    )
    validate_config(config)
    return config


def validate_config(config: ScenarioConfig) -> None:
    """Cross-field checks shared by parse_config and programmatic callers."""
    if not config.roads:
        raise ConfigError("at least one [road <id>] section is required")
    if config.duration_s < 1:
        raise ConfigError("duration_s must be >= 1")
    if config.latency_ticks < 0:
        raise ConfigError("latency_ticks must be >= 0")
    if not 0.0 <= config.drop_probability <= 1.0:
        raise ConfigError("drop_probability must lie in [0, 1]")
    if not is_valid_auth(config.security_code):
        raise ConfigError("security_code must be 8-64 chars of [A-Za-z0-9_-]")
    for ident in (config.main_id, config.operator_id):
        if not is_valid_id(ident):
            raise ConfigError(f"bad station id {ident!r}")

    station_ids = {config.main_id, config.operator_id}
    fps_values = {road.fps for road in config.roads}
    if len(fps_values) > 1:
        raise ConfigError("all roads must share the same fps (one simulation tick rate)")
    for road in config.roads:
        if not is_valid_id(road.station_id):
            raise ConfigError(f"[road {road.road_id}]: bad station_id {road.station_id!r}")
        if road.station_id in station_ids:
            raise ConfigError(f"[road {road.road_id}]: station id {road.station_id!r} reused")
        station_ids.add(road.station_id)
        if road.y_a < 0 or road.y_b >= road.height:
            raise ConfigError(
                f"[road {road.road_id}]: lines must lie inside the frame "
                f"(y_a {road.y_a}, y_b {road.y_b}, height {road.height})"
            )
        if config.duration_s < road.window_s:
            raise ConfigError(
                f"[road {road.road_id}]: duration_s {config.duration_s} "
                f"< window_s {road.window_s}"
            )
        if road.noise_seed is not None and not 0 <= road.noise_seed < 2**64:
            raise ConfigError(f"[road {road.road_id}]: noise_seed out of range")
        for v in road.vehicles:
            if v.x0 < 0 or v.x0 + v.w > road.width:
                raise ConfigError(
                    f"[road {road.road_id}]: vehicle at x0={v.x0} width {v.w} "
                    f"leaves the {road.width}px frame"
                )
            if v.y0 < 0:
                raise ConfigError(f"[road {road.road_id}]: vehicle y0 must be >= 0")

    road_ids = {road.road_id for road in config.roads}
    for action in config.actions:
        if action.kind not in (INTERRUPT, RESUME):
            raise ConfigError(f"action kind must be INTERRUPT or RESUME, got {action.kind!r}")
        if action.road_id not in road_ids:
            raise ConfigError(f"action references unknown road {action.road_id!r}")
        if not 0 <= action.at_s < config.duration_s:
            raise ConfigError(
                f"action at_s {action.at_s} outside scenario [0, {config.duration_s})"
            )
        if action.kind == RESUME and action.text:
            raise ConfigError("text is only valid for INTERRUPT actions")
        if len(action.text) > MAX_TEXT_LEN or any(
            not 32 <= ord(c) <= 126 for c in action.text
        ):
            raise ConfigError(
                f"action text must be one line of at most {MAX_TEXT_LEN} printable ASCII chars"
            )
        if action.code is not None and not is_valid_auth(action.code):
            raise ConfigError("action code must be 8-64 chars of [A-Za-z0-9_-]")


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def emit_config(config: ScenarioConfig) -> str:
    """Canonical text for a config; parse_config(emit_config(c)) == c."""
    out = [
        f"seed = {config.seed}",
        f"duration_s = {config.duration_s}",
        f"latency_ticks = {config.latency_ticks}",
        f"drop_probability = {_fmt(config.drop_probability)}",
        f"security_code = {config.security_code}",
        f"main_id = {config.main_id}",
        f"operator_id = {config.operator_id}",
    ]
    for road in config.roads:
        out.append("")
        out.append(f"[road {road.road_id}]")
        out.append(f"station_id = {road.station_id}")
        out.append(f"width = {road.width}")
        out.append(f"height = {road.height}")
        out.append(f"fps = {road.fps}")
        out.append(f"background_level = {road.background_level}")
        out.append(f"noise_amplitude = {road.noise_amplitude}")
        if road.noise_seed is not None:
            out.append(f"noise_seed = {road.noise_seed}")
        out.append(f"y_a = {road.y_a}")
        out.append(f"y_b = {road.y_b}")
        out.append(f"distance_m = {_fmt(road.distance_m)}")
        out.append(f"speed_limit_mps = {_fmt(road.speed_limit_mps)}")
        out.append(f"window_s = {road.window_s}")
        out.append(f"threshold = {road.threshold}")
        out.append(f"min_area = {road.min_area}")
        out.append(f"gate_px = {_fmt(road.gate_px)}")
        for v in road.vehicles:
            out.append(
                f"vehicle = {v.spawn_frame},{_fmt(v.speed_px_per_frame)},"
                f"{v.x0},{v.y0},{v.w},{v.h},{v.intensity}"
            )
    for action in config.actions:
        out.append("")
        out.append("[action]")
        out.append(f"at_s = {_fmt(action.at_s)}")
        out.append(f"kind = {action.kind}")
        out.append(f"road = {action.road_id}")
        if action.text:
            out.append(f"text = {action.text}")
        if action.code is not None:
            out.append(f"code = {action.code}")
    return "\n".join(out) + "\n"


def action_tick(action: ActionSpec, fps: int) -> int:
    """First simulation tick whose time is at or after the action's at_s."""
    return max(0, math.ceil(action.at_s * fps - 1e-9))


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, seed=seed)
