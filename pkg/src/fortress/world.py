"""The fortress: bordered grid, definition table, live instances, action log,
and class-level visit tracking.

Tiles hold any number of entities (the touch condition requires overlap);
only the border wall blocks movement.  Instance ids are a monotone counter
rendered as 4 lowercase hex digits from "0001" (8 digits past 0xffff).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import ConfigError, SimConfig
from .fsm import EntityDef, generate_fsm, parse_defs, serialize_fsm
from .rng import Rng

EXTINCTION = "extinction"
OVERPOPULATION = "overpopulation"
INACTIVITY = "inactivity"
TICK_LIMIT = "tick_limit"

# Guard for "repeat while a draw succeeds" loops, which never exit on their
# own at probability 1.  Hit with probability < 6e-20 at pop_perc 0.5.
DRAW_LOOP_CAP = 64


class WorldError(ValueError):
    pass


class SaveParseError(WorldError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def format_id(n: int) -> str:
    return f"{n:04x}" if n <= 0xFFFF else f"{n:08x}"


@dataclass
class EntityInstance:
    id: str
    character: str
    x: int
    y: int
    node: int = 0

    @property
    def num(self) -> int:
        return int(self.id, 16)


@dataclass(frozen=True)
class LogEntry:
    tick: int
    id: str
    character: str
    detail: str

    def line(self) -> str:
        return f"[t={self.tick}] {self.id}({self.character}) {self.detail}"


@dataclass
class Fortress:
    width: int
    height: int
    seed: int  # rng state at the point this snapshot starts running
    defs: dict[str, EntityDef] = field(default_factory=dict)
    instances: dict[str, EntityInstance] = field(default_factory=dict)
    log: list[LogEntry] = field(default_factory=list)
    visited_nodes: dict[str, set[int]] = field(default_factory=dict)
    visited_edges: dict[str, set[tuple[int, int]]] = field(default_factory=dict)
    tick: int = 0
    last_action_tick: int = 0
    termination: str | None = None
    trace: list | None = None  # optional ("exec", ch, node) / ("trans", ch, src, dst) events
    _positions: dict[tuple[int, int], list[str]] = field(default_factory=dict)
    _next_id: int = 1

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def add_def(self, d: EntityDef) -> None:
        self.defs[d.character] = d
        self.visited_nodes.setdefault(d.character, set())
        self.visited_edges.setdefault(d.character, set())

    def spawn(self, character: str, x: int, y: int) -> str:
        if character not in self.defs:
            raise WorldError(f"unknown character {character!r}")
        if not self.in_bounds(x, y):
            raise WorldError(f"position ({x}, {y}) outside the interior")
        iid = format_id(self._next_id)
        self._next_id += 1
        self.instances[iid] = EntityInstance(iid, character, x, y)
        self._positions.setdefault((x, y), []).append(iid)
        return iid

    def remove(self, iid: str) -> None:
        inst = self.instances.pop(iid, None)
        if inst is None:
            raise WorldError(f"unknown instance id {iid!r}")
        self._unindex(inst)

    def _unindex(self, inst: EntityInstance) -> None:
        ids = self._positions[(inst.x, inst.y)]
        ids.remove(inst.id)
        if not ids:
            del self._positions[(inst.x, inst.y)]

    def move_instance(self, inst: EntityInstance, x: int, y: int) -> None:
        self._unindex(inst)
        inst.x, inst.y = x, y
        self._positions.setdefault((x, y), []).append(inst.id)

    def ids_at(self, x: int, y: int) -> list[str]:
        return self._positions.get((x, y), [])

    def log_action(self, inst: EntityInstance, detail: str) -> None:
        self.log.append(LogEntry(self.tick, inst.id, inst.character, detail))
        self.last_action_tick = self.tick

    def mark_node(self, character: str, node: int) -> None:
        self.visited_nodes[character].add(node)
        if self.trace is not None:
            self.trace.append(("exec", character, node))

    def mark_edge(self, character: str, src: int, dst: int) -> None:
        self.visited_edges[character].add((src, dst))
        if self.trace is not None:
            self.trace.append(("trans", character, src, dst))

    def coverage(self) -> tuple[int, int, int]:
        """(visited, unvisited, total) over every definition, instantiated
        or not; visitation is class-level."""
        t = sum(d.size() for d in self.defs.values())
        v = sum(len(self.visited_nodes[ch]) + len(self.visited_edges[ch]) for ch in self.defs)
        return v, t - v, t


def terminated(fortress: Fortress, inactive_limit: int) -> str | None:
    """Extinction beats overpopulation beats inactivity.  The population
    threshold is strict: exactly width*height entities is still fine."""
    count = len(fortress.instances)
    if count == 0:
        return EXTINCTION
    if count > fortress.width * fortress.height:
        return OVERPOPULATION
    if fortress.tick - fortress.last_action_tick >= inactive_limit:
        return INACTIVITY
    return None


def init_fortress(config: SimConfig, rng: Rng) -> Fortress:
    """Build a fresh fortress from a config.

    Definitions are generated (or loaded via defs_file) for every character
    in config order.  Then, per spawn character: one instance at a uniform
    interior tile (x drawn before y), plus extra copies while a pop_perc
    draw succeeds (capped at DRAW_LOOP_CAP).
    """
    if not config.characters:
        raise ConfigError("config has no characters")
    fortress = Fortress(config.width, config.height, seed=0)
    if config.defs_file is not None:
        raise WorldError("defs_file configs must be initialized via init_fortress_with_defs")
    for ch in config.characters:
        fortress.add_def(generate_fsm(ch, config, rng))
    _spawn_initial(fortress, config, rng)
    return fortress


def init_fortress_with_defs(config: SimConfig, defs: dict[str, EntityDef], rng: Rng) -> Fortress:
    """As init_fortress, but with fixed definitions (no generation draws)."""
    missing = [ch for ch in config.characters if ch not in defs]
    if missing:
        raise WorldError(f"defs missing for characters: {missing}")
    fortress = Fortress(config.width, config.height, seed=0)
    for ch in config.characters:
        fortress.add_def(defs[ch])
    _spawn_initial(fortress, config, rng)
    return fortress


def _spawn_initial(fortress: Fortress, config: SimConfig, rng: Rng) -> None:
    for ch in config.spawn_characters:
        fortress.spawn(ch, rng.below(config.width), rng.below(config.height))
        copies = 0
        while copies < DRAW_LOOP_CAP and rng.chance(config.pop_perc):
            fortress.spawn(ch, rng.below(config.width), rng.below(config.height))
            copies += 1


# --- save format -------------------------------------------------------------
#
# FORTRESS seed=<u64> w=<int> h=<int>
# <entity defs in FSM text form>
# INSTANCES
# <char> <id> <x> <y> <node>
# END
#
# The seed field is the rng state at the moment the snapshot starts running,
# so a replay seeds a generator with it and reproduces the run exactly.

def serialize_fortress(fortress: Fortress) -> str:
    parts = [f"FORTRESS seed={fortress.seed} w={fortress.width} h={fortress.height}\n"]
    parts.extend(serialize_fsm(d) for d in fortress.defs.values())
    parts.append("INSTANCES\n")
    for inst in fortress.instances.values():
        parts.append(f"{inst.character} {inst.id} {inst.x} {inst.y} {inst.node}\n")
    parts.append("END\n")
    return "".join(parts)


def parse_fortress(text: str) -> Fortress:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("FORTRESS "):
        raise SaveParseError(1, "missing FORTRESS header")
    try:
        kv = dict(item.split("=", 1) for item in lines[0].split()[1:])
        seed, width, height = int(kv["seed"]), int(kv["w"]), int(kv["h"])
    except (ValueError, KeyError):
        raise SaveParseError(1, f"bad header {lines[0]!r}") from None

    try:
        split = lines.index("INSTANCES")
    except ValueError:
        raise SaveParseError(len(lines), "missing INSTANCES section") from None

    fortress = Fortress(width, height, seed)
    for d in parse_defs("\n".join(lines[1:split]), start_line=2).values():
        fortress.add_def(d)

    max_num = 0
    for offset, raw in enumerate(lines[split + 1:], start=split + 2):
        line = raw.strip()
        if not line:
            continue
        if line == "END":
            break
        parts = line.split()
        if len(parts) != 5 or len(parts[0]) != 1:
            raise SaveParseError(offset, f"expected '<char> <id> <x> <y> <node>', got {line!r}")
        ch, iid = parts[0], parts[1]
        try:
            x, y, node = int(parts[2]), int(parts[3]), int(parts[4])
            num = int(iid, 16)
        except ValueError:
            raise SaveParseError(offset, f"bad instance line {line!r}") from None
        if ch not in fortress.defs:
            raise SaveParseError(offset, f"instance of undefined character {ch!r}")
        if not fortress.in_bounds(x, y):
            raise SaveParseError(offset, f"position ({x}, {y}) outside the interior")
        if not 0 <= node < len(fortress.defs[ch].nodes):
            raise SaveParseError(offset, f"node index {node} out of range for {ch!r}")
        if iid in fortress.instances:
            raise SaveParseError(offset, f"duplicate instance id {iid!r}")
        fortress.instances[iid] = EntityInstance(iid, ch, x, y, node)
        fortress._positions.setdefault((x, y), []).append(iid)
        max_num = max(max_num, num)
    else:
        raise SaveParseError(len(lines), "missing END line")
    fortress._next_id = max_num + 1
    return fortress


def render_log(fortress: Fortress, cause: str) -> str:
    """Full log text: one line per action, the termination marker, every
    definition, and the seed needed to reproduce the run."""
    parts = [entry.line() + "\n" for entry in fortress.log]
    parts.append(f"TERMINATED {cause} t={fortress.tick}\n")
    parts.extend(serialize_fsm(d) for d in fortress.defs.values())
    parts.append(f"SEED {fortress.seed}\n")
    return "".join(parts)
