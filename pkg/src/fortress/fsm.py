"""FSM definitions for entity behavior: types, random generation, pruning,
and the text serialization used by save files and bundled scenario defs."""

from __future__ import annotations

from dataclasses import dataclass, field

from .rng import Rng

ACTION_KINDS = ("idle", "move", "die", "clone", "push", "take", "chase", "add", "transform")
PARAM_ACTIONS = frozenset({"take", "chase", "add", "transform"})

CONDITION_KINDS = ("none", "step", "within", "nextTo", "touch")
# Transition priority: when several outgoing edges are satisfied the highest
# priority wins (ties resolved by lowest (src, dst)).
CONDITION_PRIORITY = {"none": 0, "step": 1, "within": 2, "nextTo": 3, "touch": 4}


class FsmError(ValueError):
    pass


class FsmParseError(FsmError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class ActionNode:
    kind: str
    param: str | None = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise FsmError(f"unknown action kind {self.kind!r}")
        if (self.param is not None) != (self.kind in PARAM_ACTIONS):
            raise FsmError(f"action {self.kind!r} param mismatch: {self.param!r}")

    def label(self) -> str:
        return self.kind if self.param is None else f"{self.kind} {self.param}"


@dataclass(frozen=True)
class EdgeCondition:
    kind: str
    step: int | None = None      # step only, >= 1
    char: str | None = None      # within / nextTo / touch
    dist: int | None = None      # within only, >= 1

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise FsmError(f"unknown condition kind {self.kind!r}")
        want_step = self.kind == "step"
        want_char = self.kind in ("within", "nextTo", "touch")
        want_dist = self.kind == "within"
        if (self.step is not None) != want_step or (self.char is not None) != want_char \
                or (self.dist is not None) != want_dist:
            raise FsmError(f"condition {self.kind!r} has malformed parameters")
        if self.step is not None and self.step < 1:
            raise FsmError("step parameter must be >= 1")
        if self.dist is not None and self.dist < 1:
            raise FsmError("within distance must be >= 1")

    @property
    def priority(self) -> int:
        return CONDITION_PRIORITY[self.kind]

    def label(self) -> str:
        if self.kind == "step":
            return f"step {self.step}"
        if self.kind == "within":
            return f"within {self.char} {self.dist}"
        if self.kind in ("nextTo", "touch"):
            return f"{self.kind} {self.char}"
        return "none"


@dataclass(frozen=True)
class FsmEdge:
    src: int
    dst: int
    cond: EdgeCondition

    def __post_init__(self):
        if self.src == self.dst:
            raise FsmError(f"self-loop on node {self.src}")


@dataclass(frozen=True)
class EntityDef:
    """Per-character FSM shared by all instances of that character.

    Node 0 is always the idle root.  Edges are kept canonically sorted by
    (src, dst) so that structurally equal definitions compare and serialize
    identically.
    """

    character: str
    nodes: tuple[ActionNode, ...]
    edges: tuple[FsmEdge, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: (e.src, e.dst))))
        validate_def(self)

    def out_edges(self, src: int) -> tuple[FsmEdge, ...]:
        return tuple(e for e in self.edges if e.src == src)

    def size(self) -> int:
        return len(self.nodes) + len(self.edges)


def validate_def(d: EntityDef) -> None:
    """Raise FsmError when any structural invariant is broken."""
    if not d.nodes:
        raise FsmError("definition has no nodes")
    if d.nodes[0] != ActionNode("idle"):
        raise FsmError("node 0 must be the idle root")
    if len(set(d.nodes)) != len(d.nodes):
        raise FsmError("duplicate node identity (kind, param)")
    n = len(d.nodes)
    if len(d.edges) > n * (n - 1):
        raise FsmError("edge count exceeds n*(n-1)")
    seen = set()
    for e in d.edges:
        if not (0 <= e.src < n and 0 <= e.dst < n):
            raise FsmError(f"edge {e.src}->{e.dst} references a missing node")
        if (e.src, e.dst) in seen:
            raise FsmError(f"duplicate edge {e.src}->{e.dst}")
        seen.add((e.src, e.dst))


def expanded_actions(config) -> list[ActionNode]:
    """The full action list a definition may draw from, in canonical order.

    Parameterized kinds (take/chase/add/transform) are expanded over the
    config character set; node uniqueness applies to the (kind, param) pair.
    """
    out = []
    for kind in config.action_space:
        if kind in PARAM_ACTIONS:
            out.extend(ActionNode(kind, ch) for ch in config.characters)
        else:
            out.append(ActionNode(kind))
    return out


def random_condition(config, rng: Rng) -> EdgeCondition:
    """Draw a condition; order: kind, then char (if any), then int (if any)."""
    kind = rng.choice(config.edge_conditions)
    if kind == "step":
        lo, hi = config.step_range
        return EdgeCondition("step", step=lo + rng.below(hi - lo + 1))
    if kind == "within":
        ch = rng.choice(config.characters)
        lo, hi = config.prox_range
        return EdgeCondition("within", char=ch, dist=lo + rng.below(hi - lo + 1))
    if kind in ("nextTo", "touch"):
        return EdgeCondition(kind, char=rng.choice(config.characters))
    return EdgeCondition("none")


def generate_fsm(character: str, config, rng: Rng) -> EntityDef:
    """Random definition: idle root plus a random subset of the remaining
    actions, then a random set of directed conditional edges.

    Draw order: node count k ~ U[1, min(8, available)]; k-1 node picks
    without replacement; edge count m ~ U[0, k*(k-1)]; then per edge a pair
    pick without replacement followed by its condition draws.
    """
    pool = expanded_actions(config)
    candidates = [a for a in pool if a != ActionNode("idle")]
    available = len(candidates) + 1
    k = 1 + rng.below(min(8, available))
    nodes = [ActionNode("idle")]
    for _ in range(k - 1):
        nodes.append(candidates.pop(rng.below(len(candidates))))

    pairs = [(s, d) for s in range(k) for d in range(k) if s != d]
    m = rng.below(k * (k - 1) + 1)
    edges = []
    for _ in range(m):
        s, d = pairs.pop(rng.below(len(pairs)))
        edges.append(FsmEdge(s, d, random_condition(config, rng)))
    return EntityDef(character, tuple(nodes), tuple(edges))


def prune(d: EntityDef) -> EntityDef:
    """Keep exactly the nodes reachable from the root (which always stays)
    and the edges between survivors, preserving node order."""
    adj: dict[int, list[int]] = {}
    for e in d.edges:
        adj.setdefault(e.src, []).append(e.dst)
    reachable = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for s in frontier:
            for t in adj.get(s, ()):
                if t not in reachable:
                    reachable.add(t)
                    nxt.append(t)
        frontier = nxt
    if len(reachable) == len(d.nodes):
        return d
    keep = sorted(reachable)
    remap = {old: new for new, old in enumerate(keep)}
    nodes = tuple(d.nodes[i] for i in keep)
    edges = tuple(FsmEdge(remap[e.src], remap[e.dst], e.cond)
                  for e in d.edges if e.src in reachable and e.dst in reachable)
    return EntityDef(d.character, nodes, edges)


# --- text form -------------------------------------------------------------
#
# ENTITY <char>
# NODES
# <index>: <kind>[ <param-char>]
# EDGES
# <src> -> <dst> :: <kind>[ <args>]
# END
#
# Edge args: step <int> | within <char> <int> | nextTo <char> | touch <char>.
# serialize emits edges sorted by (src, dst); parse accepts any edge order.

def serialize_fsm(d: EntityDef) -> str:
    lines = [f"ENTITY {d.character}", "NODES"]
    lines.extend(f"{i}: {node.label()}" for i, node in enumerate(d.nodes))
    lines.append("EDGES")
    lines.extend(f"{e.src} -> {e.dst} :: {e.cond.label()}" for e in d.edges)
    lines.append("END")
    return "\n".join(lines) + "\n"


def _parse_node_line(line_no: int, body: str, index: int) -> ActionNode:
    head, sep, rest = body.partition(":")
    if not sep:
        raise FsmParseError(line_no, f"expected '<index>: <action>', got {body!r}")
    try:
        idx = int(head.strip())
    except ValueError:
        raise FsmParseError(line_no, f"bad node index {head.strip()!r}") from None
    if idx != index:
        raise FsmParseError(line_no, f"node index {idx} out of order (expected {index})")
    parts = rest.split()
    if not parts:
        raise FsmParseError(line_no, "missing action kind")
    kind = parts[0]
    if kind not in ACTION_KINDS:
        raise FsmParseError(line_no, f"unknown action {kind!r}")
    if kind in PARAM_ACTIONS:
        if len(parts) != 2 or len(parts[1]) != 1:
            raise FsmParseError(line_no, f"action {kind!r} needs a single-character target")
        return ActionNode(kind, parts[1])
    if len(parts) != 1:
        raise FsmParseError(line_no, f"action {kind!r} takes no parameter")
    return ActionNode(kind)


def _parse_edge_line(line_no: int, body: str) -> FsmEdge:
    try:
        ends, _, cond_text = body.partition("::")
        src_text, arrow, dst_text = ends.partition("->")
        if not arrow or not cond_text:
            raise ValueError
        src, dst = int(src_text.strip()), int(dst_text.strip())
    except ValueError:
        raise FsmParseError(line_no, f"expected '<src> -> <dst> :: <cond>', got {body!r}") from None
    parts = cond_text.split()
    if not parts:
        raise FsmParseError(line_no, "missing edge condition")
    kind = parts[0]
    try:
        if kind == "none" and len(parts) == 1:
            cond = EdgeCondition("none")
        elif kind == "step" and len(parts) == 2:
            cond = EdgeCondition("step", step=int(parts[1]))
        elif kind == "within" and len(parts) == 3 and len(parts[1]) == 1:
            cond = EdgeCondition("within", char=parts[1], dist=int(parts[2]))
        elif kind in ("nextTo", "touch") and len(parts) == 2 and len(parts[1]) == 1:
            cond = EdgeCondition(kind, char=parts[1])
        else:
            raise FsmParseError(line_no, f"malformed condition {cond_text.strip()!r}")
    except (ValueError, FsmError) as exc:
        if isinstance(exc, FsmParseError):
            raise
        raise FsmParseError(line_no, f"malformed condition {cond_text.strip()!r}") from None
    if src == dst:
        raise FsmParseError(line_no, f"self-loop on node {src}")
    return FsmEdge(src, dst, cond)


def parse_defs(text: str, start_line: int = 1) -> dict[str, EntityDef]:
    """Parse a sequence of ENTITY blocks; blank lines between blocks allowed."""
    defs: dict[str, EntityDef] = {}
    character = None
    nodes: list[ActionNode] = []
    edges: list[FsmEdge] = []
    section = None
    for offset, raw in enumerate(text.splitlines()):
        line_no = start_line + offset
        line = raw.strip()
        if not line:
            continue
        if line.startswith("ENTITY"):
            if character is not None:
                raise FsmParseError(line_no, "ENTITY before previous block ended")
            name = line[len("ENTITY"):].strip()
            if len(name) != 1:
                raise FsmParseError(line_no, f"entity name must be one character, got {name!r}")
            if name in defs:
                raise FsmParseError(line_no, f"duplicate definition for {name!r}")
            character, nodes, edges, section = name, [], [], None
        elif character is None:
            raise FsmParseError(line_no, f"unexpected text outside ENTITY block: {line!r}")
        elif line == "NODES":
            section = "nodes"
        elif line == "EDGES":
            section = "edges"
        elif line == "END":
            try:
                defs[character] = EntityDef(character, tuple(nodes), tuple(edges))
            except FsmError as exc:
                raise FsmParseError(line_no, str(exc)) from None
            character = None
        elif section == "nodes":
            node = _parse_node_line(line_no, line, len(nodes))
            if node in nodes:
                raise FsmParseError(line_no, f"duplicate node {node.label()!r}")
            nodes.append(node)
        elif section == "edges":
            edge = _parse_edge_line(line_no, line)
            if not (edge.src < len(nodes) and edge.dst < len(nodes)):
                raise FsmParseError(line_no, f"edge {edge.src}->{edge.dst} references a missing node")
            if any(e.src == edge.src and e.dst == edge.dst for e in edges):
                raise FsmParseError(line_no, f"duplicate edge {edge.src}->{edge.dst}")
            edges.append(edge)
        else:
            raise FsmParseError(line_no, f"unexpected line {line!r}")
    if character is not None:
        raise FsmParseError(start_line + len(text.splitlines()), "unterminated ENTITY block")
    return defs


def parse_fsm(text: str) -> EntityDef:
    """Parse exactly one ENTITY block."""
    defs = parse_defs(text)
    if len(defs) != 1:
        raise FsmParseError(1, f"expected exactly one ENTITY block, found {len(defs)}")
    return next(iter(defs.values()))
