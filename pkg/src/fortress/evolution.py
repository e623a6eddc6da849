"""(1+1) hillclimber over fortress genomes.

A genome stores the definition table plus (character, x, y) placements and
nothing else; every evaluation builds a distinctly new fortress with fresh
ids, node 0 everywhere, and empty visit sets.  Fitness is
visited / (unvisited + 1) * total over all definitions, instantiated or not.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import SimConfig
from .engine import run
from .fsm import EntityDef, FsmEdge, expanded_actions, prune, random_condition
from .rng import Rng
from .world import DRAW_LOOP_CAP, Fortress, init_fortress, init_fortress_with_defs

Placement = tuple[str, int, int]


@dataclass(frozen=True)
class Genome:
    defs: dict[str, EntityDef]
    placements: tuple[Placement, ...]


@dataclass(frozen=True)
class MutationParams:
    node_prob: float = 0.5
    edge_prob: float = 0.5
    instance_prob: float = 0.5

    def __post_init__(self):
        for p in (self.node_prob, self.edge_prob, self.instance_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"mutation probability {p} outside [0, 1]")


@dataclass
class FitnessResult:
    score: float
    visited: int
    unvisited: int
    total: int
    num_entities: int   # live entities when the evaluation run ended
    termination: str
    fortress: Fortress  # the evaluated fortress, for coverage inspection


@dataclass(frozen=True)
class EvolutionRecord:
    generation: int
    best_fitness: float
    child_fitness: float
    num_entities: int
    termination: str


@dataclass
class HillclimbResult:
    best: Genome
    best_fitness: float
    records: list[EvolutionRecord]


def random_genome(config: SimConfig, rng: Rng, defs: dict[str, EntityDef] | None = None) -> Genome:
    """Initial genome: generated (or fixed) defs plus the initial spawn set."""
    if defs is None:
        fortress = init_fortress(config, rng)
    else:
        fortress = init_fortress_with_defs(config, defs, rng)
    placements = tuple((i.character, i.x, i.y) for i in fortress.instances.values())
    return Genome(dict(fortress.defs), placements)


def instantiate(genome: Genome, config: SimConfig) -> Fortress:
    """Fresh fortress from a genome; consumes no random draws."""
    fortress = Fortress(config.width, config.height, seed=0)
    for d in genome.defs.values():
        fortress.add_def(d)
    for ch, x, y in genome.placements:
        fortress.spawn(ch, x, y)
    return fortress


# --- mutation operators ------------------------------------------------------
# Each returns (new_def, changed).  Inapplicable operators are silent no-ops.

def delete_node(d: EntityDef, config: SimConfig, rng: Rng) -> tuple[EntityDef, bool]:
    n = len(d.nodes)
    if n <= 1:  # the root is never deleted
        return d, False
    idx = 1 + rng.below(n - 1)
    nodes = d.nodes[:idx] + d.nodes[idx + 1:]
    remap = lambda i: i if i < idx else i - 1
    edges = tuple(FsmEdge(remap(e.src), remap(e.dst), e.cond)
                  for e in d.edges if e.src != idx and e.dst != idx)
    return EntityDef(d.character, nodes, edges), True


def add_node(d: EntityDef, config: SimConfig, rng: Rng) -> tuple[EntityDef, bool]:
    unused = [a for a in expanded_actions(config) if a not in d.nodes]
    if not unused:
        return d, False
    return EntityDef(d.character, d.nodes + (unused[rng.below(len(unused))],), d.edges), True


def alter_node(d: EntityDef, config: SimConfig, rng: Rng) -> tuple[EntityDef, bool]:
    n = len(d.nodes)
    if n <= 1:  # the root stays idle
        return d, False
    idx = 1 + rng.below(n - 1)
    unused = [a for a in expanded_actions(config) if a not in d.nodes]
    if not unused:
        return d, False
    nodes = d.nodes[:idx] + (unused[rng.below(len(unused))],) + d.nodes[idx + 1:]
    return EntityDef(d.character, nodes, d.edges), True


def delete_edge(d: EntityDef, config: SimConfig, rng: Rng) -> tuple[EntityDef, bool]:
    if len(d.edges) <= 1:  # deletion requires more than one edge
        return d, False
    idx = rng.below(len(d.edges))
    return EntityDef(d.character, d.nodes, d.edges[:idx] + d.edges[idx + 1:]), True


def add_edge(d: EntityDef, config: SimConfig, rng: Rng) -> tuple[EntityDef, bool]:
    n = len(d.nodes)
    occupied = {(e.src, e.dst) for e in d.edges}
    free = [(s, t) for s in range(n) for t in range(n) if s != t and (s, t) not in occupied]
    if not free:
        return d, False
    s, t = free[rng.below(len(free))]
    edge = FsmEdge(s, t, random_condition(config, rng))
    return EntityDef(d.character, d.nodes, d.edges + (edge,)), True


def alter_edge(d: EntityDef, config: SimConfig, rng: Rng) -> tuple[EntityDef, bool]:
    if not d.edges:
        return d, False
    idx = rng.below(len(d.edges))
    old = d.edges[idx]
    edge = FsmEdge(old.src, old.dst, random_condition(config, rng))
    return EntityDef(d.character, d.nodes, d.edges[:idx] + (edge,) + d.edges[idx + 1:]), True


_NODE_OPS = (delete_node, add_node, alter_node)
_EDGE_OPS = (delete_edge, add_edge, alter_edge)


def mutate(genome: Genome, params: MutationParams, config: SimConfig, rng: Rng) -> Genome:
    """Three independent geometric loops (nodes, edges, instances).

    Draw order: the three loop gates are drawn up front; each iteration then
    draws the operator index, the target, and the operator's own draws, and
    finally redraws its gate.  Loops are capped at DRAW_LOOP_CAP iterations
    so probability-1 parameters still terminate.  Every changed definition
    is pruned afterwards.
    """
    defs = dict(genome.defs)
    placements = list(genome.placements)
    chars = list(defs.keys())
    changed: set[str] = set()

    node_r = rng.unit()
    edge_r = rng.unit()
    instance_r = rng.unit()

    rounds = 0
    while node_r < params.node_prob and rounds < DRAW_LOOP_CAP:
        op = _NODE_OPS[rng.below(3)]
        ch = chars[rng.below(len(chars))]
        defs[ch], did = op(defs[ch], config, rng)
        if did:
            changed.add(ch)
        node_r = rng.unit()
        rounds += 1

    rounds = 0
    while edge_r < params.edge_prob and rounds < DRAW_LOOP_CAP:
        op = _EDGE_OPS[rng.below(3)]
        ch = chars[rng.below(len(chars))]
        defs[ch], did = op(defs[ch], config, rng)
        if did:
            changed.add(ch)
        edge_r = rng.unit()
        rounds += 1

    rounds = 0
    while instance_r < params.instance_prob and rounds < DRAW_LOOP_CAP:
        if rng.below(2) == 0:
            if placements:
                placements.pop(rng.below(len(placements)))
        else:
            ch = chars[rng.below(len(chars))]
            placements.append((ch, rng.below(config.width), rng.below(config.height)))
        instance_r = rng.unit()
        rounds += 1

    for ch in changed:
        defs[ch] = prune(defs[ch])
    return Genome(defs, tuple(placements))


def fitness(genome: Genome, config: SimConfig, rng: Rng, ticks: int,
            trace: bool = False) -> FitnessResult:
    """Simulate the genome for at most `ticks` ticks and score its coverage.
    Deterministic given the genome and the generator state."""
    fortress = instantiate(genome, config)
    if trace:
        fortress.trace = []
    fortress.seed = rng.state
    cause = run(fortress, config, rng, ticks)
    v, u, t = fortress.coverage()
    return FitnessResult(v / (u + 1) * t, v, u, t, len(fortress.instances), cause, fortress)


def hillclimb(config: SimConfig, params: MutationParams, generations: int, ticks: int,
              rng: Rng, defs: dict[str, EntityDef] | None = None) -> HillclimbResult:
    """Keep-the-best search: generation 0 is a random genome; afterwards a
    mutated child replaces the champion only on a strictly higher score."""
    if generations < 1:
        raise ValueError("generations must be >= 1")
    best = random_genome(config, rng, defs)
    best_result = fitness(best, config, rng, ticks)
    best_score = best_result.score
    records = [EvolutionRecord(0, best_score, best_score,
                               best_result.num_entities, best_result.termination)]
    for generation in range(1, generations):
        child = mutate(best, params, config, rng)
        result = fitness(child, config, rng, ticks)
        if result.score > best_score:
            best, best_score = child, result.score
        records.append(EvolutionRecord(generation, best_score, result.score,
                                       result.num_entities, result.termination))
    return HillclimbResult(best, best_score, records)


def records_to_csv(records: list[EvolutionRecord]) -> str:
    lines = ["generation,best_fitness,child_fitness,num_entities,termination"]
    lines.extend(f"{r.generation},{r.best_fitness},{r.child_fitness},{r.num_entities},{r.termination}"
                 for r in records)
    return "\n".join(lines) + "\n"


def coverage_stats(fortress: Fortress) -> dict[str, tuple[float, float | None]]:
    """Per character: (visited-node fraction, visited-edge fraction).  The
    edge fraction is None for definitions without edges."""
    stats = {}
    for ch, d in fortress.defs.items():
        node_cov = len(fortress.visited_nodes[ch]) / len(d.nodes)
        edge_cov = len(fortress.visited_edges[ch]) / len(d.edges) if d.edges else None
        stats[ch] = (node_cov, edge_cov)
    return stats


def average_coverage(stats: dict[str, tuple[float, float | None]]) -> tuple[float, float]:
    """Fortress-wide averages; defs without edges are left out of the edge
    average."""
    node_covs = [nc for nc, _ in stats.values()]
    edge_covs = [ec for _, ec in stats.values() if ec is not None]
    avg_nodes = sum(node_covs) / len(node_covs) if node_covs else 0.0
    avg_edges = sum(edge_covs) / len(edge_covs) if edge_covs else 0.0
    return avg_nodes, avg_edges
