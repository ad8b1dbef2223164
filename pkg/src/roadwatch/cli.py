"""Command-line interface: run scenarios, inject operator actions, preview
scenes, and validate configs.

Subcommands::

    roadwatch run    --config C --out DIR [--seed N] [--dump-frames]
    roadwatch inject --config C --at-s S --kind INTERRUPT|RESUME --road R
                     [--text T] [--code CODE]
    roadwatch render --config C --road R --frame N --out FILE.pgm
    roadwatch check  --config C

``inject`` appends an [action] block to the config file before a run; it is
not a live control channel. Config problems exit with status 1 and a message
on stderr, before any output is produced.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ActionSpec,
    ConfigError,
    ScenarioConfig,
    parse_config,
    validate_config,
)
from .imaging import render_scene, write_pgm
from .m2m import INTERRUPT, RESUME
from .runner import run_scenario


def _load_config(path: str) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return parse_config(text)


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    run_scenario(config, args.out, dump_frames=args.dump_frames)
    print(f"scenario complete: outputs in {args.out}")
    return 0


def _cmd_inject(args) -> int:
    config = _load_config(args.config)
    action = ActionSpec(
        at_s=args.at_s,
        kind=args.kind,
        road_id=args.road,
        text=args.text or "",
        code=args.code,
    )
    # Validate the combined scenario before touching the file.
    validate_config(replace(config, actions=config.actions + (action,)))
    block = [
        "",
        "[action]",
        f"at_s = {action.at_s!r}",
        f"kind = {action.kind}",
        f"road = {action.road_id}",
    ]
    if action.text:
        block.append(f"text = {action.text}")
    if action.code is not None:
        block.append(f"code = {action.code}")
    with open(args.config, "a", encoding="utf-8") as fh:
        fh.write("\n".join(block) + "\n")
    print(f"action appended to {args.config}")
    return 0


def _cmd_render(args) -> int:
    config = _load_config(args.config)
    for index, road in enumerate(config.roads):
        if road.road_id == args.road:
            scene = road.scene_config(config.noise_seed_for(index))
            frame = render_scene(scene, args.frame)
            Path(args.out).write_bytes(write_pgm(frame))
            print(f"wrote {frame.width}x{frame.height} frame {args.frame} to {args.out}")
            return 0
    raise ConfigError(f"unknown road {args.road!r}")


def _cmd_check(args) -> int:
    config = _load_config(args.config)
    vehicles = sum(len(road.vehicles) for road in config.roads)
    print(
        f"OK: {len(config.roads)} road(s), {vehicles} vehicle(s), "
        f"{len(config.actions)} action(s), duration {config.duration_s}s"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadwatch", description="deterministic two-station traffic monitor simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--dump-frames", action="store_true", help="write every frame as PGM")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("inject", help="append an operator action to a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--at-s", type=float, required=True, dest="at_s")
    p.add_argument("--kind", required=True, choices=[INTERRUPT, RESUME])
    p.add_argument("--road", required=True)
    p.add_argument("--text", default=None, help="display text (INTERRUPT only)")
    p.add_argument("--code", default=None, help="security code override")
    p.set_defaults(func=_cmd_inject)

    p = sub.add_parser("render", help="render one scene frame to a PGM file")
    p.add_argument("--config", required=True)
    p.add_argument("--road", required=True)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("check", help="validate a config and print a summary")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
