"""Simulation configuration: a line-oriented "key: value" file.

Lists are comma-separated, ranges are "(lo, hi)", and '#' starts a comment.
Optional keys fall back to the defaults below; `characters` is required.

key              default      meaning
---------------- ------------ ------------------------------------------
seed             any          u64 seed, or "any" for a fresh entropy seed
characters       (required)   entity glyphs (not '#', not space)
action_space     all 9 kinds  actions FSM generation may use
edge_conditions  all 5 kinds  conditions FSM generation may use
step_range       (1, 5)       step condition parameter range
prox_range       (1, 4)       within condition distance range
save_log         True         write the action log after a run
log_file         fortress_log.txt   log file name (inside the output dir)
min_log          5            only save logs for runs of >= this many ticks
inactive_limit   10           ticks without a logged action before stopping
pop_perc         0.5          duplicate-spawn chance (init copies, clone, add)
width            13           interior width in tiles
height           6            interior height in tiles
defs_file        (none)       FSM text file with fixed defs (skips generation)
spawn            characters   subset of characters placed at init
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from .fsm import ACTION_KINDS, CONDITION_KINDS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int
    characters: tuple[str, ...]
    action_space: tuple[str, ...] = ACTION_KINDS
    edge_conditions: tuple[str, ...] = CONDITION_KINDS
    step_range: tuple[int, int] = (1, 5)
    prox_range: tuple[int, int] = (1, 4)
    save_log: bool = True
    log_file: str = "fortress_log.txt"
    min_log: int = 5
    inactive_limit: int = 10
    pop_perc: float = 0.5
    width: int = 13
    height: int = 6
    defs_file: str | None = None
    spawn: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.characters:
            raise ConfigError("characters must not be empty")
        if len(set(self.characters)) != len(self.characters):
            raise ConfigError("characters must be distinct")
        for ch in self.characters:
            if len(ch) != 1 or ch in ("#", " "):
                raise ConfigError(f"invalid character {ch!r}")
        if "idle" not in self.action_space:
            raise ConfigError("action_space must contain idle")
        for a in self.action_space:
            if a not in ACTION_KINDS:
                raise ConfigError(f"unknown action {a!r}")
        for c in self.edge_conditions:
            if c not in CONDITION_KINDS:
                raise ConfigError(f"unknown edge condition {c!r}")
        for name, (lo, hi) in (("step_range", self.step_range), ("prox_range", self.prox_range)):
            if lo < 1 or lo > hi:
                raise ConfigError(f"{name} must satisfy 1 <= min <= max, got ({lo}, {hi})")
        if not 0.0 <= self.pop_perc <= 1.0:
            raise ConfigError(f"pop_perc must be in [0, 1], got {self.pop_perc}")
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be >= 1")
        if self.min_log < 0:
            raise ConfigError("min_log must be >= 0")
        if self.inactive_limit < 1:
            raise ConfigError("inactive_limit must be >= 1")
        if not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must fit in 64 bits")
        if self.spawn is not None:
            for ch in self.spawn:
                if ch not in self.characters:
                    raise ConfigError(f"spawn character {ch!r} not in characters")

    @property
    def spawn_characters(self) -> tuple[str, ...]:
        return self.characters if self.spawn is None else self.spawn


def _split_list(value: str) -> list[str]:
    items = [item.strip() for item in value.split(",")]
    if any(not item for item in items):
        raise ValueError("empty list item")
    return items


def _parse_pair(value: str) -> tuple[int, int]:
    body = value.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError("expected (min, max)")
    lo, hi = (int(p.strip()) for p in body[1:-1].split(","))
    return lo, hi


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise ValueError("expected True or False")


def parse_config(text: str) -> SimConfig:
    """Parse and validate a config file; "seed: any" resolves to fresh
    system entropy so the run stays replayable from recorded outputs."""
    raw: dict[str, str] = {}
    lines: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {line_no}: expected 'key: value', got {body!r}")
        if key in raw:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        raw[key] = value
        lines[key] = line_no

    fields: dict[str, object] = {}

    def take(key, fn):
        if key in raw:
            try:
                fields[key] = fn(raw.pop(key))
            except ValueError as exc:
                raise ConfigError(f"line {lines[key]}: bad value for {key!r}: {exc}") from None

    take("seed", lambda v: secrets.randbits(64) if v.lower() == "any" else int(v))
    take("characters", lambda v: tuple(_split_list(v)))
    take("action_space", lambda v: tuple(_split_list(v)))
    take("edge_conditions", lambda v: tuple(_split_list(v)))
    take("step_range", _parse_pair)
    take("prox_range", _parse_pair)
    take("save_log", _parse_bool)
    take("log_file", str)
    take("min_log", int)
    take("inactive_limit", int)
    take("pop_perc", float)
    take("width", int)
    take("height", int)
    take("defs_file", str)
    take("spawn", lambda v: tuple(_split_list(v)))

    if raw:
        key = next(iter(raw))
        raise ConfigError(f"line {lines[key]}: unknown key {key!r}")
    if "seed" not in fields:
        fields["seed"] = secrets.randbits(64)
    if "characters" not in fields:
        raise ConfigError("missing required key 'characters'")
    try:
        return SimConfig(**fields)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(config: SimConfig) -> str:
    """Canonical text for a resolved config; parse(serialize(c)) == c."""
    lines = [
        f"seed: {config.seed}",
        f"characters: {', '.join(config.characters)}",
        f"action_space: {', '.join(config.action_space)}",
        f"edge_conditions: {', '.join(config.edge_conditions)}",
        f"step_range: ({config.step_range[0]}, {config.step_range[1]})",
        f"prox_range: ({config.prox_range[0]}, {config.prox_range[1]})",
        f"save_log: {config.save_log}",
        f"log_file: {config.log_file}",
        f"min_log: {config.min_log}",
        f"inactive_limit: {config.inactive_limit}",
        f"pop_perc: {config.pop_perc}",
        f"width: {config.width}",
        f"height: {config.height}",
    ]
    if config.defs_file is not None:
        lines.append(f"defs_file: {config.defs_file}")
    if config.spawn is not None:
        lines.append(f"spawn: {', '.join(config.spawn)}")
    return "\n".join(lines) + "\n"
