import pytest

from fortress import (EXTINCTION, INACTIVITY, TICK_LIMIT, ActionNode, EdgeCondition,
                      EngineError, EntityDef, Fortress, FsmEdge, Rng, SimConfig,
                      evaluate_condition, render_log, run, step)

# Direction draw order in the engine: 0=north, 1=south, 2=east, 3=west.
NORTH, SOUTH, EAST, WEST = 0, 1, 2, 3


class ScriptedRng:
    """Feeds pre-chosen draws to the engine; chance(p) pops 1/0."""

    def __init__(self, *values):
        self.values = list(values)
        self.state = 0

    def below(self, n):
        v = self.values.pop(0)
        assert 0 <= v < n, f"scripted draw {v} out of range {n}"
        return v

    def chance(self, p):
        return self.values.pop(0) == 1

    def unit(self):
        return self.values.pop(0)


def idle_def(ch="a"):
    return EntityDef(ch, (ActionNode("idle"),))


def cycle_def(ch, action, param=None):
    """idle <-> action on unconditional edges: the action runs every other tick."""
    return EntityDef(ch, (ActionNode("idle"), ActionNode(action, param)),
                     (FsmEdge(0, 1, EdgeCondition("none")), FsmEdge(1, 0, EdgeCondition("none"))))


def make(defs, *spawns, width=13, height=6):
    f = Fortress(width, height, seed=0)
    for d in defs:
        f.add_def(d)
    for ch, x, y in spawns:
        f.spawn(ch, x, y)
    return f


CFG = SimConfig(seed=0, characters=("a", "b", "$"), pop_perc=1.0, inactive_limit=10)


# --- conditions ---------------------------------------------------------------

def cond_fortress():
    return make([idle_def("a"), idle_def("b"), idle_def("$")])


def test_none_condition_always_true():
    f = cond_fortress()
    iid = f.spawn("a", 0, 0)
    assert evaluate_condition(EdgeCondition("none"), f.instances[iid], f)


def test_step_condition_uses_tick_modulo():
    f = cond_fortress()
    iid = f.spawn("a", 0, 0)
    cond = EdgeCondition("step", step=5)
    f.tick = 10
    assert evaluate_condition(cond, f.instances[iid], f)
    f.tick = 7
    assert not evaluate_condition(cond, f.instances[iid], f)


def test_within_uses_manhattan_distance():
    f = cond_fortress()
    link = f.spawn("a", 2, 2)
    f.spawn("$", 4, 3)  # distance |4-2| + |3-2| = 3
    inst = f.instances[link]
    assert evaluate_condition(EdgeCondition("within", char="$", dist=3), inst, f)
    assert not evaluate_condition(EdgeCondition("within", char="$", dist=2), inst, f)


def test_next_to_means_exactly_adjacent():
    f = cond_fortress()
    a = f.spawn("a", 2, 2)
    f.spawn("b", 2, 3)
    inst = f.instances[a]
    assert evaluate_condition(EdgeCondition("nextTo", char="b"), inst, f)
    assert not evaluate_condition(EdgeCondition("touch", char="b"), inst, f)
    assert not evaluate_condition(EdgeCondition("nextTo", char="$"), inst, f)


def test_touch_requires_shared_tile():
    f = cond_fortress()
    a = f.spawn("a", 5, 5)
    f.spawn("$", 5, 5)
    assert evaluate_condition(EdgeCondition("touch", char="$"), f.instances[a], f)


def test_probe_never_matches_itself():
    f = cond_fortress()
    a = f.spawn("a", 5, 5)
    inst = f.instances[a]
    assert not evaluate_condition(EdgeCondition("touch", char="a"), inst, f)
    assert not evaluate_condition(EdgeCondition("within", char="a", dist=2), inst, f)
    f.spawn("a", 5, 5)
    assert evaluate_condition(EdgeCondition("touch", char="a"), inst, f)


# --- actions -------------------------------------------------------------------

def test_idle_logs_nothing_but_marks_node():
    f = make([idle_def("a")], ("a", 0, 0))
    step(f, CFG, ScriptedRng())
    assert len(f.log) == 0
    assert f.visited_nodes["a"] == {0}


def test_move_east_updates_position_and_log():
    f = make([cycle_def("a", "move")], ("a", 5, 5))
    step(f, CFG, ScriptedRng())            # tick 1: idle, then 0->1
    step(f, CFG, ScriptedRng(EAST))        # tick 2: move east
    inst = next(iter(f.instances.values()))
    assert (inst.x, inst.y) == (6, 5)
    assert f.log[-1].line() == "[t=2] 0001(a) move east"


def test_blocked_move_is_silent_and_consumes_one_draw():
    f = make([cycle_def("a", "move")], ("a", 0, 0))
    step(f, CFG, ScriptedRng())
    rng = ScriptedRng(WEST)
    step(f, CFG, rng)
    inst = next(iter(f.instances.values()))
    assert (inst.x, inst.y) == (0, 0)
    assert len(f.log) == 0
    assert rng.values == []


def test_die_removes_instance_and_logs():
    f = make([cycle_def("a", "die")], ("a", 3, 3))
    step(f, CFG, ScriptedRng())
    report = step(f, CFG, ScriptedRng())
    assert len(f.instances) == 0
    assert f.log[-1].line() == "[t=2] 0001(a) die"
    assert report.removed == ["0001"]
    assert report.terminated == EXTINCTION


def test_clone_spawns_adjacent_same_class():
    f = make([cycle_def("a", "clone")], ("a", 5, 5))
    step(f, CFG, ScriptedRng())
    report = step(f, CFG, ScriptedRng(1, 0))  # gate success, first adjacent tile (north)
    assert report.spawned == ["0002"]
    child = f.instances["0002"]
    assert (child.character, child.x, child.y, child.node) == ("a", 5, 4, 0)
    assert f.log[-1].detail == "clone 0002"


def test_clone_gate_failure_spawns_nothing():
    f = make([cycle_def("a", "clone")], ("a", 5, 5))
    step(f, CFG, ScriptedRng())
    rng = ScriptedRng(0)  # gate fails; no tile draw
    step(f, CFG, rng)
    assert len(f.instances) == 1
    assert rng.values == []


def test_spawned_entity_first_acts_next_tick():
    f = make([cycle_def("a", "clone")], ("a", 5, 5))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng(1, 0))          # clone spawns 0002 this tick
    assert f.instances["0002"].node == 0     # no phase B for the newborn
    step(f, CFG, ScriptedRng(1, 0))          # 0001 idles; 0002 idles and transitions
    assert f.instances["0002"].node == 1


def test_push_into_empty_tile_moves_self():
    f = make([cycle_def("a", "push")], ("a", 5, 3))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng(SOUTH))
    inst = f.instances["0001"]
    assert (inst.x, inst.y) == (5, 4)
    assert f.log[-1].detail == "push south"


def test_push_displaces_lowest_id_occupant():
    f = make([cycle_def("a", "push"), idle_def("b")],
             ("a", 5, 5), ("b", 6, 5), ("b", 6, 5))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng(EAST))
    assert (f.instances["0002"].x, f.instances["0002"].y) == (7, 5)  # pushed one over
    assert (f.instances["0003"].x, f.instances["0003"].y) == (6, 5)  # untouched
    assert (f.instances["0001"].x, f.instances["0001"].y) == (6, 5)
    assert f.log[-1].detail == "push east 0002"


def test_push_against_wall_does_nothing():
    f = make([cycle_def("a", "push"), idle_def("b")], ("a", 1, 0), ("b", 0, 0))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng(WEST))  # occupant at (0,0), beyond is the wall
    assert (f.instances["0001"].x, f.instances["0001"].y) == (1, 0)
    assert (f.instances["0002"].x, f.instances["0002"].y) == (0, 0)
    assert len(f.log) == 0


def test_take_removes_lowest_id_target_on_own_tile():
    f = make([cycle_def("a", "take", "$"), idle_def("$")],
             ("a", 4, 4), ("$", 4, 4), ("$", 4, 4))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())
    assert "0002" not in f.instances and "0003" in f.instances
    assert f.log[-1].detail == "take 0002"


def test_take_with_no_target_is_silent():
    f = make([cycle_def("a", "take", "$"), idle_def("$")], ("a", 4, 4), ("$", 5, 4))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())
    assert len(f.log) == 0


def test_chase_steps_along_larger_axis_first():
    f = make([cycle_def("a", "chase", "$"), idle_def("$")], ("a", 2, 2), ("$", 4, 3))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())  # offset (2,1): east wins
    inst = f.instances["0001"]
    assert (inst.x, inst.y) == (3, 2)
    assert f.log[-1].detail == "chase east"


def test_chase_tie_prefers_horizontal():
    f = make([cycle_def("a", "chase", "$"), idle_def("$")], ("a", 2, 2), ("$", 4, 4))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())  # offset (2,2): tie, horizontal first
    assert (f.instances["0001"].x, f.instances["0001"].y) == (3, 2)


def test_chase_picks_nearest_then_lowest_id():
    f = make([cycle_def("a", "chase", "$"), idle_def("$")],
             ("a", 5, 5), ("$", 9, 5), ("$", 5, 2), ("$", 8, 5))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())  # 0003 and 0004 tie at distance 3; lowest id wins -> north
    assert f.log[-1].detail == "chase north"


def test_chase_without_target_or_overlapping_is_silent():
    f = make([cycle_def("a", "chase", "$"), idle_def("$")], ("a", 5, 5))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())
    assert len(f.log) == 0
    g = make([cycle_def("a", "chase", "$"), idle_def("$")], ("a", 5, 5), ("$", 5, 5))
    step(g, CFG, ScriptedRng())
    step(g, CFG, ScriptedRng())
    assert len(g.log) == 0


def test_add_spawns_target_class():
    f = make([cycle_def("a", "add", "$"), idle_def("$")], ("a", 5, 5))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng(1, 1))  # gate success, tile draw picks south
    assert f.instances["0002"].character == "$"
    assert f.log[-1].detail == "add $ 0002"


def test_transform_switches_class_and_resets_node():
    dollar = EntityDef("$", (ActionNode("idle"), ActionNode("move")),
                       (FsmEdge(0, 1, EdgeCondition("none")),))
    f = make([cycle_def("a", "transform", "$"), dollar], ("a", 5, 5))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())
    inst = f.instances["0001"]
    assert inst.character == "$"
    assert f.log[-1].line() == "[t=2] 0001(a) transform $"
    # phase B already ran on the new class's root
    assert inst.node == 1
    assert (0, 1) in f.visited_edges["$"]


# --- transitions ----------------------------------------------------------------

def test_highest_priority_edge_wins():
    d = EntityDef("a", (ActionNode("idle"), ActionNode("move"), ActionNode("die")),
                  (FsmEdge(0, 1, EdgeCondition("step", step=1)),
                   FsmEdge(0, 2, EdgeCondition("touch", char="$"))))
    f = make([d, idle_def("$")], ("a", 3, 3), ("$", 3, 3))
    step(f, CFG, ScriptedRng())
    assert f.instances["0001"].node == 2  # touch (4) beats step (1)
    assert f.visited_edges["a"] == {(0, 2)}


def test_priority_tie_takes_lowest_dst():
    d = EntityDef("a", (ActionNode("idle"), ActionNode("move"), ActionNode("die")),
                  (FsmEdge(0, 2, EdgeCondition("none")), FsmEdge(0, 1, EdgeCondition("none"))))
    f = make([d], ("a", 3, 3))
    step(f, CFG, ScriptedRng())
    assert f.instances["0001"].node == 1


def test_three_priorities_highest_wins():
    d = EntityDef("a", (ActionNode("idle"), ActionNode("move"), ActionNode("die"),
                        ActionNode("push")),
                  (FsmEdge(0, 1, EdgeCondition("none")),
                   FsmEdge(0, 2, EdgeCondition("within", char="$", dist=4)),
                   FsmEdge(0, 3, EdgeCondition("nextTo", char="$"))))
    f = make([d, idle_def("$")], ("a", 3, 3), ("$", 3, 4))
    step(f, CFG, ScriptedRng())  # all three satisfied; nextTo (3) beats within (2) beats none (0)
    assert f.instances["0001"].node == 3


def test_position_index_agrees_with_instances_every_tick():
    cfg = SimConfig(seed=0, characters=("a", "b"), pop_perc=0.6)
    from fortress import init_fortress
    rng = Rng(42)
    f = init_fortress(cfg, rng)
    for _ in range(30):
        if f.termination:
            break
        step(f, cfg, rng)
        indexed = {(iid, pos) for pos, ids in f._positions.items() for iid in ids}
        live = {(i.id, (i.x, i.y)) for i in f.instances.values()}
        assert indexed == live


def test_no_satisfied_edge_keeps_node():
    d = EntityDef("a", (ActionNode("idle"), ActionNode("move")),
                  (FsmEdge(0, 1, EdgeCondition("touch", char="$")),))
    f = make([d, idle_def("$")], ("a", 3, 3))
    step(f, CFG, ScriptedRng())
    assert f.instances["0001"].node == 0
    assert f.visited_edges["a"] == set()


def test_update_order_is_ascending_id():
    # two takers share a tile with one target: the lower id wins the race
    f = make([cycle_def("a", "take", "$"), idle_def("$")],
             ("a", 4, 4), ("a", 4, 4), ("$", 4, 4))
    step(f, CFG, ScriptedRng())
    step(f, CFG, ScriptedRng())
    takes = [e for e in f.log if e.detail.startswith("take")]
    assert len(takes) == 1 and takes[0].id == "0001"


def test_removed_mid_tick_entity_is_skipped():
    # 0001 takes 0002 before 0002 would act; 0002 must not move
    f = make([cycle_def("a", "take", "b"), cycle_def("b", "move")],
             ("a", 4, 4), ("b", 4, 4))
    step(f, CFG, ScriptedRng())
    rng = ScriptedRng()  # b would need a direction draw if it acted
    step(f, CFG, rng)
    assert "0002" not in f.instances
    assert rng.values == []


def test_korok_transforms_first_tick_after_adjacency():
    korok = EntityDef("k", (ActionNode("idle"), ActionNode("transform", "$")),
                      (FsmEdge(0, 1, EdgeCondition("nextTo", char="L")),))
    f = make([korok, idle_def("L"), idle_def("$")], ("k", 3, 3), ("L", 3, 4))
    step(f, CFG, ScriptedRng())  # adjacency seen in phase B -> node 1
    assert f.instances["0001"].node == 1
    step(f, CFG, ScriptedRng())  # transform executes
    assert f.instances["0001"].character == "$"
    assert f.log[0].tick == 2 and f.log[0].detail == "transform $"


# --- run -----------------------------------------------------------------------

def test_run_zero_ticks_returns_tick_limit():
    f = make([idle_def("a")], ("a", 0, 0))
    assert run(f, CFG, Rng(0), 0) == TICK_LIMIT


def test_run_all_idle_hits_inactivity_at_limit():
    cfg = SimConfig(seed=0, characters=("a",), inactive_limit=5)
    f = make([idle_def("a")], ("a", 0, 0))
    assert run(f, cfg, Rng(0), 50) == INACTIVITY
    assert f.tick == 5


def test_run_on_empty_fortress_reports_extinction():
    f = make([idle_def("a")])
    assert run(f, CFG, Rng(0), 10) == EXTINCTION
    assert f.tick == 0


def test_step_after_termination_raises():
    f = make([idle_def("a")])
    run(f, CFG, Rng(0), 10)
    with pytest.raises(EngineError):
        step(f, CFG, Rng(0))


def test_identical_seeds_identical_logs():
    cfg = SimConfig(seed=0, characters=("a", "b"), pop_perc=0.5)
    def one(seed):
        from fortress import init_fortress
        rng = Rng(seed)
        f = init_fortress(cfg, rng)
        cause = run(f, cfg, rng, 30)
        return render_log(f, cause)
    assert one(123) == one(123)
    assert one(123) != one(124)
