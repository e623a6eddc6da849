"""Command-line interface: simulate, evolve, replay, validate.

Output files land in --out (default $AF_OUT_DIR, then ./out).  Rendering is
a pure observer: it never touches the random stream, so logs are identical
with and without --render.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .config import ConfigError, SimConfig, parse_config, serialize_config
from .engine import run
from .evolution import MutationParams, hillclimb, instantiate, records_to_csv
from .fsm import EntityDef, FsmError, parse_defs
from .rng import Rng
from .world import (Fortress, SaveParseError, init_fortress, init_fortress_with_defs,
                    parse_fortress, render_log, serialize_fortress)


def load_config(path: Path) -> tuple[SimConfig, dict[str, EntityDef] | None]:
    """Parse a config file; when it names a defs_file (relative to the
    config's directory), load the fixed definitions too."""
    config = parse_config(path.read_text(encoding="utf-8"))
    defs = None
    if config.defs_file is not None:
        defs_path = Path(config.defs_file)
        if not defs_path.is_absolute():
            defs_path = path.parent / defs_path
        defs = parse_defs(defs_path.read_text(encoding="utf-8"))
    return config, defs


def build_fortress(config: SimConfig, defs: dict[str, EntityDef] | None, rng: Rng) -> Fortress:
    if defs is None:
        fortress = init_fortress(config, rng)
    else:
        fortress = init_fortress_with_defs(config, defs, rng)
    fortress.seed = rng.state  # replaying the save resumes from right here
    return fortress


def render_frame(fortress: Fortress, verbose: bool = False) -> str:
    """ASCII view: border, entities (topmost = highest id), status line, and
    the last five log lines."""
    border = "#" * (fortress.width + 2)
    rows = [border]
    for y in range(fortress.height):
        cells = []
        for x in range(fortress.width):
            ids = fortress.ids_at(x, y)
            if ids:
                top = max(ids, key=lambda i: int(i, 16))
                cells.append(fortress.instances[top].character)
            else:
                cells.append(".")
        rows.append(f"#{''.join(cells)}#")
    rows.append(border)
    rows.append(f"tick={fortress.tick} entities={len(fortress.instances)}")
    rows.extend(entry.line() for entry in fortress.log[-5:])
    if verbose:
        for inst in fortress.instances.values():
            node = fortress.defs[inst.character].nodes[inst.node]
            rows.append(f"  {inst.id}({inst.character}) @({inst.x},{inst.y}) node={inst.node}:{node.label()}")
    return "\n".join(rows)


def _renderer(args):
    if not args.render:
        return None
    delay = args.delay_ms / 1000.0

    def on_tick(fortress, report):
        print(render_frame(fortress, verbose=args.verbose))
        print()
        if delay > 0:
            time.sleep(delay)
    return on_tick


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("AF_OUT_DIR") or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def cmd_simulate(args) -> int:
    config, defs = load_config(Path(args.config))
    out = _out_dir(args)
    rng = Rng(config.seed)
    fortress = build_fortress(config, defs, rng)
    save_path = out / "fortress_save.txt"
    _write(save_path, serialize_fortress(fortress))
    cause = run(fortress, config, rng, args.ticks, on_tick=_renderer(args))
    print(f"seed: {config.seed}")
    print(f"terminated: {cause} t={fortress.tick}")
    print(f"save: {save_path}")
    if config.save_log and fortress.tick >= config.min_log:
        log_path = out / config.log_file
        _write(log_path, render_log(fortress, cause))
        print(f"log: {log_path}")
    return 0


def cmd_evolve(args) -> int:
    config, defs = load_config(Path(args.config))
    out = _out_dir(args)
    params = MutationParams(args.node_prob, args.edge_prob, args.instance_prob)
    print(f"seed: {config.seed}")
    for trial in range(args.trials):
        trial_seed = (config.seed + trial) & ((1 << 64) - 1)
        result = hillclimb(config, params, args.generations, args.ticks,
                           Rng(trial_seed), defs)
        _write(out / f"trial{trial}_metrics.csv", records_to_csv(result.records))

        # Re-run the champion on a fresh stream so the save/log pair is
        # self-contained and replayable.
        final_rng = Rng(trial_seed)
        fortress = instantiate(result.best, config)
        fortress.seed = final_rng.state
        _write(out / f"trial{trial}_best.txt", serialize_fortress(fortress))
        cause = run(fortress, config, final_rng, args.ticks)
        _write(out / f"trial{trial}_log.txt", render_log(fortress, cause))
        print(f"trial {trial}: seed={trial_seed} best_fitness={result.best_fitness}")
    return 0


def cmd_replay(args) -> int:
    fortress = parse_fortress(Path(args.save).read_text(encoding="utf-8"))
    if args.config:
        config, _ = load_config(Path(args.config))
    else:
        # Replay dynamics fall back to the documented defaults; pass --config
        # when the original run used a different pop_perc or inactive_limit.
        config = SimConfig(seed=fortress.seed, characters=tuple(fortress.defs.keys()))
    out = _out_dir(args)
    rng = Rng(fortress.seed)
    cause = run(fortress, config, rng, args.ticks, on_tick=_renderer(args))
    log_path = out / "replay_log.txt"
    _write(log_path, render_log(fortress, cause))
    print(f"terminated: {cause} t={fortress.tick}")
    print(f"log: {log_path}")
    return 0


def cmd_validate(args) -> int:
    config, defs = load_config(Path(args.config))
    print(serialize_config(config), end="")
    if defs is not None:
        print(f"# defs_file defines: {', '.join(defs.keys())}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fortress",
                                     description="FSM-agent grid-world simulator and hillclimber")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, render=False):
        p.add_argument("--out", help="output directory (default $AF_OUT_DIR, then ./out)")
        if render:
            p.add_argument("--render", action="store_true", help="draw the grid after each tick")
            p.add_argument("--delay-ms", type=int, default=100, help="render delay per tick")
            p.add_argument("--verbose", action="store_true", help="also list each entity's node")

    p = sub.add_parser("simulate", help="run one fortress")
    p.add_argument("--config", required=True)
    p.add_argument("--ticks", type=int, default=100)
    add_common(p, render=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evolve", help="run hillclimber trials")
    p.add_argument("--config", required=True)
    p.add_argument("--generations", type=int, default=1000)
    p.add_argument("--ticks", type=int, default=20)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--node-prob", type=float, default=0.5)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--instance-prob", type=float, default=0.5)
    add_common(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("replay", help="re-run a saved fortress")
    p.add_argument("save", help="fortress save file")
    p.add_argument("--config", help="config for dynamics parameters (pop_perc, inactive_limit)")
    p.add_argument("--ticks", type=int, default=100)
    add_common(p, render=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("validate", help="parse a config and echo the resolved values")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FsmError, SaveParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
