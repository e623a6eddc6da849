"""The tick loop.

Each tick has two phases.  Phase A: entities alive at tick start act in
ascending id order (entities spawned during the tick wait until the next
one; entities removed mid-phase are skipped).  Phase B: every survivor
evaluates the outgoing edges of its current node against the post-action
world; the satisfied edge with the highest condition priority wins, ties
going to the lowest (src, dst); the new node's action runs next tick.

A node counts as visited when its action executes; an edge when it is
traversed.  Only state-changing outcomes are logged (and so only they reset
the inactivity clock): actual movement, a successful push, clone, add, take,
transform, or die.  Blocked moves and idle are silent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import SimConfig
from .fsm import ActionNode, EdgeCondition
from .rng import Rng
from .world import TICK_LIMIT, EntityInstance, Fortress, terminated

# Direction draw order; y grows southward (row 0 renders at the top).
DIRECTIONS = (("north", 0, -1), ("south", 0, 1), ("east", 1, 0), ("west", -1, 0))


class EngineError(RuntimeError):
    pass


@dataclass
class TickReport:
    tick: int
    actions_logged: int = 0
    spawned: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    terminated: str | None = None


PositionIndex = dict[str, list[tuple[int, int, int]]]


def _position_index(fortress: Fortress) -> PositionIndex:
    index: PositionIndex = {}
    for inst in fortress.instances.values():
        index.setdefault(inst.character, []).append((inst.x, inst.y, inst.num))
    return index


def evaluate_condition(cond: EdgeCondition, inst: EntityInstance, fortress: Fortress,
                       index: PositionIndex | None = None) -> bool:
    """Truth of one edge condition for one instance.  The probing instance
    never matches itself."""
    if cond.kind == "none":
        return True
    if cond.kind == "step":
        return fortress.tick % cond.step == 0
    if index is None:
        index = _position_index(fortress)
    num = inst.num
    if cond.kind == "within":
        for x, y, other in index.get(cond.char, ()):
            if other != num and abs(x - inst.x) + abs(y - inst.y) <= cond.dist:
                return True
        return False
    if cond.kind == "nextTo":
        for x, y, other in index.get(cond.char, ()):
            if abs(x - inst.x) + abs(y - inst.y) == 1:
                return True
        return False
    # touch
    for x, y, other in index.get(cond.char, ()):
        if other != num and x == inst.x and y == inst.y:
            return True
    return False


def _adjacent_interior(fortress: Fortress, x: int, y: int) -> list[tuple[int, int]]:
    return [(x + dx, y + dy) for _, dx, dy in DIRECTIONS if fortress.in_bounds(x + dx, y + dy)]


def _spawn_near(fortress: Fortress, inst: EntityInstance, character: str, rng: Rng) -> str:
    """Uniform adjacent interior tile, or the instance's own tile if none."""
    tiles = _adjacent_interior(fortress, inst.x, inst.y)
    x, y = tiles[rng.below(len(tiles))] if tiles else (inst.x, inst.y)
    return fortress.spawn(character, x, y)


def _lowest_occupant(fortress: Fortress, x: int, y: int,
                     character: str | None = None, exclude: str | None = None) -> str | None:
    best = None
    for iid in fortress.ids_at(x, y):
        if iid == exclude:
            continue
        if character is not None and fortress.instances[iid].character != character:
            continue
        if best is None or int(iid, 16) < int(best, 16):
            best = iid
    return best


def execute_action(node: ActionNode, inst: EntityInstance, fortress: Fortress,
                   config: SimConfig, rng: Rng, report: TickReport) -> None:
    """Run one action.  All failure modes are silent no-ops; draw order per
    action is fixed (documented inline) so replays stay exact."""
    kind = node.kind

    if kind == "idle":
        return

    if kind == "move":
        name, dx, dy = DIRECTIONS[rng.below(4)]
        nx, ny = inst.x + dx, inst.y + dy
        if fortress.in_bounds(nx, ny):
            fortress.log_action(inst, f"move {name}")
            fortress.move_instance(inst, nx, ny)
        return

    if kind == "die":
        fortress.log_action(inst, "die")
        fortress.remove(inst.id)
        report.removed.append(inst.id)
        return

    if kind == "clone":
        # one gate draw, then (on success) one tile draw
        if rng.chance(config.pop_perc):
            new_id = _spawn_near(fortress, inst, inst.character, rng)
            fortress.log_action(inst, f"clone {new_id}")
            report.spawned.append(new_id)
        return

    if kind == "push":
        name, dx, dy = DIRECTIONS[rng.below(4)]
        tx, ty = inst.x + dx, inst.y + dy
        if not fortress.in_bounds(tx, ty):
            return
        occupant = _lowest_occupant(fortress, tx, ty)
        if occupant is None:
            fortress.log_action(inst, f"push {name}")
            fortress.move_instance(inst, tx, ty)
            return
        bx, by = tx + dx, ty + dy
        if fortress.in_bounds(bx, by):
            fortress.log_action(inst, f"push {name} {occupant}")
            fortress.move_instance(fortress.instances[occupant], bx, by)
            fortress.move_instance(inst, tx, ty)
        return

    if kind == "take":
        victim = _lowest_occupant(fortress, inst.x, inst.y, node.param, exclude=inst.id)
        if victim is not None:
            fortress.log_action(inst, f"take {victim}")
            fortress.remove(victim)
            report.removed.append(victim)
        return

    if kind == "chase":
        target = None
        for other in fortress.instances.values():
            if other.character != node.param or other.id == inst.id:
                continue
            key = (abs(other.x - inst.x) + abs(other.y - inst.y), other.num)
            if target is None or key < target[0]:
                target = (key, other)
        if target is None or target[0][0] == 0:
            return
        dx, dy = target[1].x - inst.x, target[1].y - inst.y
        steps = []  # larger-separation axis first; ties go horizontal
        if dx != 0:
            steps.append(("east" if dx > 0 else "west", inst.x + (1 if dx > 0 else -1), inst.y))
        if dy != 0:
            steps.append(("south" if dy > 0 else "north", inst.x, inst.y + (1 if dy > 0 else -1)))
        if abs(dy) > abs(dx):
            steps.reverse()
        for name, nx, ny in steps:
            if fortress.in_bounds(nx, ny):
                fortress.log_action(inst, f"chase {name}")
                fortress.move_instance(inst, nx, ny)
                return
        return

    if kind == "add":
        if rng.chance(config.pop_perc):
            new_id = _spawn_near(fortress, inst, node.param, rng)
            fortress.log_action(inst, f"add {node.param} {new_id}")
            report.spawned.append(new_id)
        return

    if kind == "transform":
        fortress.log_action(inst, f"transform {node.param}")
        inst.character = node.param
        inst.node = 0
        return

    raise EngineError(f"unhandled action kind {kind!r}")


def step(fortress: Fortress, config: SimConfig, rng: Rng) -> TickReport:
    """Advance one tick: phase A (actions), phase B (transitions), then the
    termination predicates."""
    if fortress.termination is not None:
        raise EngineError("cannot step a terminated fortress")
    fortress.tick += 1
    report = TickReport(tick=fortress.tick)
    log_start = len(fortress.log)

    starters = list(fortress.instances.values())
    for inst in starters:
        if inst.id not in fortress.instances:
            continue
        d = fortress.defs[inst.character]
        fortress.mark_node(inst.character, inst.node)
        execute_action(d.nodes[inst.node], inst, fortress, config, rng, report)

    index = _position_index(fortress)
    for inst in starters:
        if inst.id not in fortress.instances:
            continue
        best = None
        for edge in fortress.defs[inst.character].out_edges(inst.node):
            if evaluate_condition(edge.cond, inst, fortress, index):
                if best is None or edge.cond.priority > best.cond.priority:
                    best = edge
        if best is not None:
            fortress.mark_edge(inst.character, best.src, best.dst)
            inst.node = best.dst

    report.actions_logged = len(fortress.log) - log_start
    report.terminated = terminated(fortress, config.inactive_limit)
    if report.terminated is not None:
        fortress.termination = report.terminated
    return report


def run(fortress: Fortress, config: SimConfig, rng: Rng, max_ticks: int,
        on_tick=None) -> str:
    """Step until a termination predicate fires or max_ticks ticks have run;
    returns the cause (a world.* constant or "tick_limit")."""
    cause = fortress.termination or terminated(fortress, config.inactive_limit)
    if cause is not None:
        fortress.termination = cause
        return cause
    for _ in range(max_ticks):
        report = step(fortress, config, rng)
        if on_tick is not None:
            on_tick(fortress, report)
        if report.terminated is not None:
            return report.terminated
    return TICK_LIMIT
