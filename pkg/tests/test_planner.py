"""Heuristic, top-k plan streaming, and backtracking refinement."""

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillplan.core import (
    AbstractState,
    Action,
    GroundAtom,
    LiftedAtom,
    State,
    Task,
    abstract,
    obj,
    object_type,
    predicate,
    variable,
)
from skillplan.operators import Operator, ground
from skillplan.planner import (
    GroundSkill,
    PlannerConfig,
    PlanMetrics,
    heuristic,
    plan,
    refine,
    topk_abstract_plans,
)
from oracles import bfs_plans

TOK = object_type("ptok", ("v",))
ANCHOR = obj("panchor", TOK)
V = variable("?p0", TOK)
_PREDS = {}


def _p(name):
    if name not in _PREDS:
        _PREDS[name] = predicate(name, (TOK,), lambda x, o: False)
    return _PREDS[name]


def atom(name):
    return GroundAtom(_p(name), (ANCHOR,))


def lifted(name):
    return LiftedAtom(_p(name), (V,))


def op(name, pre, add, dele=()):
    return Operator(
        name,
        (V,),
        frozenset(lifted(p) for p in pre),
        frozenset(lifted(p) for p in add),
        frozenset(lifted(p) for p in dele),
    )


def gskills(ops):
    out = []
    for o in ops:
        for gop in ground(o, [ANCHOR]):
            out.append(GroundSkill(SimpleNamespace(name=o.name, mode="subgoal"), gop.objects, gop))
    return out


def sset(*names):
    return AbstractState(frozenset(atom(n) for n in names))


# Toy domain 1: diamond with two 2-step routes and one 3-step route; every
# operator consumes its precondition so no padding plans exist.
DIAMOND = [
    op("via_b1", ["a"], ["b1"], ["a"]),
    op("via_b2", ["a"], ["b2"], ["a"]),
    op("b1_c", ["b1"], ["c"], ["b1"]),
    op("b2_c", ["b2"], ["c"], ["b2"]),
    op("a_d", ["a"], ["d"], ["a"]),
    op("d_e", ["d"], ["e"], ["d"]),
    op("e_c", ["e"], ["c"], ["e"]),
]

# Toy domain 2: two independent goals, interleavable: 4 plans of length 2.
PAIR = [
    op("mk_x", ["s"], ["x"]),
    op("mk_y", ["s"], ["y"]),
    op("mk_x2", ["s"], ["x"], ["s"]),  # alternative that burns the source
]

# Toy domain 3: a chain with a distractor branch that cannot reach the goal.
CHAIN = [
    op("c1", ["a"], ["b"], ["a"]),
    op("c2", ["b"], ["c"], ["b"]),
    op("c3", ["c"], ["g"], ["c"]),
    op("dead", ["a"], ["z"], ["a"]),
]


def _stream(ops, start, goal, k, max_len=30):
    cfg = PlannerConfig(n_abstract=k, n_samples=1)
    return list(topk_abstract_plans(sset(*start), frozenset(atom(g) for g in goal), gskills(ops), cfg, max_length=max_len))


def _oracle(ops, start, goal, k, max_len=8):
    gops = [gs.op for gs in gskills(ops)]
    return bfs_plans(sset(*start), frozenset(atom(g) for g in goal), gops, k, max_len)


def _sig(plan_steps):
    return tuple(str(s) for s in plan_steps)


def test_heuristic_examples():
    gops = [gs.op for gs in gskills(CHAIN)]
    assert heuristic(sset("a", "g"), [atom("g")], gops) == 0.0
    assert heuristic(sset("a"), [atom("g")], gops) == 3.0
    assert heuristic(sset("z"), [atom("g")], gops) == float("inf")
    two = [op("ab", ["a"], ["b"]), op("bc", ["b"], ["c"])]
    assert heuristic(sset("a"), [atom("c")], [g.op for g in gskills(two)]) == 2.0


def test_topk_trivial_goal_first_plan_empty():
    plans = _stream(CHAIN, ["a", "g"], ["g"], 3)
    assert len(plans[0]) == 0


@pytest.mark.parametrize(
    "ops,start,goal,expect_lengths",
    [
        (DIAMOND, ["a"], ["c"], [2, 2, 3]),
        (PAIR, ["s"], ["x", "y"], [2, 2, 2, 3, 3, 3, 3, 3, 3, 3]),
        (CHAIN, ["a"], ["g"], [3]),
    ],
)
def test_topk_matches_bfs_oracle(ops, start, goal, expect_lengths):
    # Full inventory of plans up to a length cap; any correct top-k stream
    # returns its first k in nondecreasing length, drawing from this set.
    inventory = _oracle(ops, start, goal, 10_000, max_len=4)
    inv_sigs = {_sig(o) for o in inventory}
    inv_lengths = sorted(len(o) for o in inventory)
    for k in (1, 2, 3, 5, 10):
        plans = _stream(ops, start, goal, k, max_len=4)
        assert len(plans) == min(k, len(inventory))
        assert [len(p) for p in plans] == inv_lengths[: len(plans)]
        sigs = [_sig(p.steps) for p in plans]
        assert len(set(sigs)) == len(sigs)
        assert all(s in inv_sigs for s in sigs)
    full = _stream(ops, start, goal, 10, max_len=4)
    assert [len(p) for p in full] == expect_lengths[: len(full)]


def test_topk_plans_are_distinct_and_valid():
    plans = _stream(PAIR, ["s"], ["x", "y"], 10)
    sigs = {_sig(p.steps) for p in plans}
    assert len(sigs) == len(plans)
    for p in plans:
        s = p.states[0]
        for gs, nxt in zip(p.steps, p.states[1:]):
            assert gs.op.preconditions <= s.atoms
            assert AbstractState(frozenset((s.atoms - gs.op.delete_effects) | gs.op.add_effects)) == nxt
            s = nxt
        assert frozenset({atom("x"), atom("y")}) <= s.atoms


def test_heuristic_never_inf_when_plan_exists():
    for ops, start, goal in [
        (DIAMOND, ["a"], ["c"]),
        (PAIR, ["s"], ["x", "y"]),
        (CHAIN, ["a"], ["g"]),
    ]:
        gops = [gs.op for gs in gskills(ops)]
        if _oracle(ops, start, goal, 1):
            assert heuristic(sset(*start), [atom(g) for g in goal], gops) < float("inf")


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_topk_lengths_nondecreasing_on_random_domains(data):
    names = ["a", "b", "c", "d", "e"]
    n_ops = data.draw(st.integers(2, 7))
    ops = []
    for i in range(n_ops):
        pre = data.draw(st.sets(st.sampled_from(names), max_size=2))
        add = data.draw(st.sets(st.sampled_from(names), min_size=1, max_size=2))
        dele_pool = sorted(pre - add)
        dele = data.draw(st.sets(st.sampled_from(dele_pool), max_size=2)) if dele_pool else set()
        ops.append(op(f"r{i}", pre, add, dele))
    start = data.draw(st.sets(st.sampled_from(names), min_size=1, max_size=3))
    goal = data.draw(st.sets(st.sampled_from(names), min_size=1, max_size=2))
    cfg = PlannerConfig(n_abstract=8, n_samples=1, node_budget=3000)
    plans = list(
        topk_abstract_plans(
            sset(*sorted(start)),
            frozenset(atom(g) for g in sorted(goal)),
            gskills(ops),
            cfg,
            max_length=5,
        )
    )
    lengths = [len(p) for p in plans]
    assert lengths == sorted(lengths)
    sigs = {_sig(p.steps) for p in plans}
    assert len(sigs) == len(plans)


# ---------------------------------------------------------------------------
# Refinement with a controllable fake skill
# ---------------------------------------------------------------------------

FTOK = object_type("ftok", ("v",))
FLAG = predicate("FFlag", (FTOK,), lambda x, o: x.get(o[0], "v") > 0.5, is_contact=True)
FV = variable("?f0", FTOK)


def fake_env_transition(x: State, u: Action) -> State:
    t = next(iter(x.data))
    return x.updated({t: np.array([x.get(t, "v") + float(u.values[0])])})


class FakeSkill:
    """Scripted skill: succeeds on a chosen sample attempt per step."""

    def __init__(self, succeed_on: int):
        self.name = "fake"
        self.mode = "subgoal"
        self.h_skill = 5
        self.scope_dim = 1
        self.succeed_on = succeed_on
        self.sample_calls = 0
        self.operator = Operator(
            "fake", (FV,), frozenset(), frozenset({LiftedAtom(FLAG, (FV,))}), frozenset()
        )

    def sample(self, objects, x, rng):
        self.sample_calls += 1
        good = self.sample_calls % self.succeed_on == 0
        target = 1.0 if good else 0.0
        return x.updated({objects[0]: np.array([target])})

    def _kept(self, width):
        return list(range(width))

    def action_from_input(self, inp):
        return Action(np.array([inp[1]]))  # inp = (current, relative delta)


def _fake_task():
    t = obj("ftok0", FTOK)
    x = State({t: np.array([0.0])})
    return Task((t,), x, frozenset({GroundAtom(FLAG, (t,))}), 100), t


def test_refine_empty_plan_trivial_goal():
    task, t = _fake_task()
    done = Task((t,), State({t: np.array([1.0])}), task.goal, 100)
    from skillplan.planner import AbstractPlan

    aplan = AbstractPlan((), (abstract(done.init, (FLAG,)),))
    out = refine(aplan, done, fake_env_transition, (FLAG,), PlannerConfig(n_abstract=1, n_samples=1))
    assert out == []


def test_refine_succeeds_on_second_sample_with_exactly_two_calls():
    task, t = _fake_task()
    skill = FakeSkill(succeed_on=2)
    gop = ground(skill.operator, [t])[0]
    gs = GroundSkill(skill, gop.objects, gop)
    from skillplan.planner import AbstractPlan

    s0 = abstract(task.init, (FLAG,))
    s1 = AbstractState(frozenset(s0.atoms | gop.add_effects))
    aplan = AbstractPlan((gs,), (s0, s1))
    metrics = PlanMetrics()
    out = refine(
        aplan, task, fake_env_transition, (FLAG,),
        PlannerConfig(n_abstract=1, n_samples=2), metrics=metrics,
    )
    assert out is not None
    assert skill.sample_calls == 2
    assert metrics.samples_drawn == 2


def test_refine_exhausts_and_returns_none():
    task, t = _fake_task()
    skill = FakeSkill(succeed_on=10**9)  # never succeeds
    gop = ground(skill.operator, [t])[0]
    gs = GroundSkill(skill, gop.objects, gop)
    from skillplan.planner import AbstractPlan

    s0 = abstract(task.init, (FLAG,))
    s1 = AbstractState(frozenset(s0.atoms | gop.add_effects))
    aplan = AbstractPlan((gs,), (s0, s1))
    out = refine(aplan, task, fake_env_transition, (FLAG,), PlannerConfig(n_abstract=1, n_samples=3))
    assert out is None
    assert skill.sample_calls == 3


class StuckSkill(FakeSkill):
    """Samples subgoals that never move the state: guaranteed timeout."""

    def sample(self, objects, x, rng):
        self.sample_calls += 1
        return x


def test_refine_backtracks_to_earlier_step():
    # Step 2 always fails; step 1 must be resampled until its budget runs out.
    task, t = _fake_task()
    ok = FakeSkill(succeed_on=1)
    bad = StuckSkill(succeed_on=10**9)
    bad.operator = Operator(
        "fake2", (FV,), frozenset(), frozenset(), frozenset({LiftedAtom(FLAG, (FV,))})
    )
    g_ok = GroundSkill(ok, (t,), ground(ok.operator, [t])[0])
    g_bad = GroundSkill(bad, (t,), ground(bad.operator, [t])[0])
    from skillplan.planner import AbstractPlan

    s0 = abstract(task.init, (FLAG,))
    s1 = AbstractState(frozenset(s0.atoms | g_ok.op.add_effects))
    s2 = AbstractState(frozenset(s1.atoms - g_bad.op.delete_effects))
    aplan = AbstractPlan((g_ok, g_bad), (s0, s1, s2))
    out = refine(aplan, task, fake_env_transition, (FLAG,), PlannerConfig(n_abstract=1, n_samples=2))
    assert out is None
    assert ok.sample_calls == 2  # initial + one retry after backtracking
    assert bad.sample_calls == 4  # two budgets of two


def test_plan_trivial_task_returns_empty_sequence():
    task, t = _fake_task()
    done = Task((t,), State({t: np.array([1.0])}), task.goal, 100)
    skill = FakeSkill(succeed_on=1)
    actions, metrics = plan(
        done, [_wrap(skill)], fake_env_transition, (FLAG,), PlannerConfig(n_abstract=2, n_samples=1)
    )
    assert actions == []
    assert metrics.solved and metrics.solution_length == 0


def _wrap(skill):
    # plan() grounds real Skill objects; FakeSkill mimics the needed surface.
    return skill


def test_plan_with_fake_skill_end_to_end():
    task, t = _fake_task()
    skill = FakeSkill(succeed_on=1)
    actions, metrics = plan(
        task, [skill], fake_env_transition, (FLAG,), PlannerConfig(n_abstract=4, n_samples=2)
    )
    assert actions is not None
    x = task.init
    for u in actions:
        x = fake_env_transition(x, u)
    assert abstract(x, (FLAG,)).atoms >= task.goal
    assert metrics.solved
