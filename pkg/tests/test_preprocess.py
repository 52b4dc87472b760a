"""Segmentation, effect equivalence, partitioning, and lifting."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from skillplan.core import (
    Action,
    Demonstration,
    GroundAtom,
    State,
    Task,
    abstract,
    obj,
    object_type,
    predicate,
)
from skillplan.preprocess import (
    Segment,
    SkillDataset,
    equivalent,
    lift,
    partition,
    segment,
    segment_corpus,
)
from oracles import brute_force_equivalent

# A tiny synthetic world: tokens with one feature, two unary predicates.
TOK = object_type("tok", ("v",))
FLAG = predicate("Flag", (TOK,), lambda x, o: x.get(o[0], "v") > 0.5, is_contact=True)
SOFT = predicate("Soft", (TOK,), lambda x, o: x.get(o[0], "v") > 2.0)  # not contact
PREDS = (FLAG, SOFT)


def _demo(values: list[float], tok_name: str = "tok0") -> Demonstration:
    t = obj(tok_name, TOK)
    states = tuple(State({t: np.array([v])}) for v in values)
    actions = tuple(Action(np.array([0.0])) for _ in range(len(values) - 1))
    goal = frozenset()
    task = Task((t,), states[0], goal, horizon=1000)
    return Demonstration(task, actions, states)


def test_no_contact_change_single_segment():
    demo = _demo([0.0, 0.1, 0.2, 0.3, 0.4, 0.45])
    segs = segment(demo, PREDS)
    assert len(segs) == 1
    assert len(segs[0].actions) == 5


def test_switch_point_splits_before_flip():
    # Five actions; Flag flips to true at state index 3 (caused by action 2).
    demo = _demo([0.0, 0.1, 0.2, 0.8, 0.9, 1.0])
    segs = segment(demo, PREDS)
    assert len(segs) == 2
    assert len(segs[0].actions) == 3  # actions 0,1,2
    assert len(segs[1].actions) == 2  # actions 3,4
    # Consecutive segments share the boundary state.
    assert segs[0].states[-1] is segs[1].states[0]
    t = demo.task.objects[0]
    assert segs[0].add_effects == {GroundAtom(FLAG, (t,))}
    assert segs[0].del_effects == frozenset()


def test_non_contact_changes_do_not_split():
    # Soft flips mid-trajectory but is not contact-flagged.
    demo = _demo([0.0, 1.0, 2.5, 3.0])  # Flag flips at index 1 only
    segs = segment(demo, PREDS)
    assert len(segs) == 2
    # Soft's flip is interior to segment 2 and lands in its effects.
    t = demo.task.objects[0]
    assert GroundAtom(SOFT, (t,)) in segs[1].add_effects


def test_empty_demo_empty_segments():
    t = obj("tok0", TOK)
    x = State({t: np.array([0.0])})
    task = Task((t,), x, frozenset(), horizon=10)
    demo = Demonstration(task, (), (x,))
    assert segment(demo, PREDS) == []


def test_single_step_mode_tiles_each_transition():
    demo = _demo([0.0, 0.1, 0.8, 0.9])
    segs = segment(demo, PREDS, single_step=True)
    assert len(segs) == 3
    assert all(len(s.actions) == 1 for s in segs)


def test_cover_segment_boundaries_at_pick_and_place(cover_corpus_50):
    env, demos = cover_corpus_50
    for demo in demos[:10]:
        segs = segment(demo, env.predicates)
        assert len(segs) == 4  # pick, place, pick, place
        for s in segs:
            flips = {a.predicate.name for a in (s.add_effects | s.del_effects)}
            assert flips & {"Holding", "HandEmpty", "Covers"}


# -- equivalence -------------------------------------------------------------


def _make_segment(add, dele, init_atoms=frozenset()):
    """A synthetic segment carrying only its abstract bookkeeping."""
    t = obj("seg_tok", TOK)
    x0 = State({t: np.array([0.0])})
    x1 = State({t: np.array([1.0])})
    from skillplan.core import AbstractState

    init = AbstractState(frozenset(init_atoms) | frozenset(dele))
    final = AbstractState((frozenset(init_atoms) | frozenset(add)) - frozenset(dele))
    return Segment(
        states=(x0, x1),
        actions=(Action(np.array([0.0])),),
        init_abstract=init,
        final_abstract=final,
        add_effects=frozenset(add),
        del_effects=frozenset(dele),
    )


BTN = object_type("button", ("x", "y", "pressed"))
PRESSED = predicate("Pressed", (BTN,), lambda x, o: False, is_contact=True)
B = [obj(f"button{i}", BTN) for i in range(4)]


def test_equivalent_reflexive_identity():
    seg = _make_segment({GroundAtom(PRESSED, (B[0],))}, set())
    m = equivalent(seg, seg)
    assert m == {B[0]: B[0]}


def test_equivalent_press_segments_across_buttons():
    a = _make_segment({GroundAtom(PRESSED, (B[0],))}, set())
    b = _make_segment({GroundAtom(PRESSED, (B[1],))}, set())
    assert equivalent(a, b) == {B[0]: B[1]}
    assert equivalent(b, a) == {B[1]: B[0]}


def test_equivalent_mismatch_is_none():
    press = _make_segment({GroundAtom(PRESSED, (B[0],))}, set())
    double = _make_segment(
        {GroundAtom(PRESSED, (B[0],)), GroundAtom(PRESSED, (B[1],))}, set()
    )
    assert equivalent(press, double) is None
    assert equivalent(double, press) is None


@st.composite
def random_segment(draw):
    n_objs = draw(st.integers(1, 4))
    objs = draw(st.permutations(B))[:n_objs]
    add, dele = set(), set()
    for o in objs:
        if draw(st.booleans()):
            add.add(GroundAtom(PRESSED, (o,)))
        else:
            dele.add(GroundAtom(PRESSED, (o,)))
    return _make_segment(add, dele)


@settings(max_examples=60, deadline=None)
@given(random_segment(), random_segment(), random_segment())
def test_equivalence_relation_properties(a, b, c):
    assert equivalent(a, a) is not None  # reflexive
    ab, ba = equivalent(a, b), equivalent(b, a)
    assert (ab is None) == (ba is None)  # symmetric in existence
    bc = equivalent(b, c)
    if ab is not None and bc is not None:  # transitive
        assert equivalent(a, c) is not None


@settings(max_examples=60, deadline=None)
@given(random_segment(), random_segment())
def test_equivalent_agrees_with_brute_force(a, b):
    ours = equivalent(a, b)
    oracle = brute_force_equivalent(a, b)
    if ours is None:
        assert oracle == []
    else:
        assert ours in oracle
        # Lexicographically smallest map under canonical object ordering.
        key = lambda m: tuple(m[o].name for o in a.affected_objects)
        assert key(ours) == min(key(m) for m in oracle)


def test_brute_force_agreement_on_real_corpus(stick_corpus_250):
    env, demos = stick_corpus_250
    segs = segment_corpus(demos[:8], env.predicates)
    assert len(segs) <= 40
    for a in segs:
        for b in segs:
            ours = equivalent(a, b)
            oracle = brute_force_equivalent(a, b)
            assert (ours is None) == (oracle == [])


# -- partitioning ------------------------------------------------------------


def test_partition_identical_effects_single_dataset():
    segs = [_make_segment({GroundAtom(PRESSED, (B[i % 2],))}, set()) for i in range(6)]
    datasets = partition(segs)
    assert len(datasets) == 1
    assert len(datasets[0]) == 6


def test_partition_drops_empty_effect_segments():
    segs = [_make_segment(set(), set()), _make_segment({GroundAtom(PRESSED, (B[0],))}, set())]
    assert len(partition(segs)) == 1
    assert len(partition(segs, keep_empty_effects=True)) == 2


def test_partition_counts_on_corpora(cover_corpus_50, stick_corpus_250):
    env, demos = cover_corpus_50
    datasets = partition(segment_corpus(demos, env.predicates))
    assert len(datasets) == 2
    env, demos = stick_corpus_250
    datasets = partition(segment_corpus(demos, env.predicates))
    from skillplan.operators import filter_low_data

    kept = filter_low_data([lift(d) for d in datasets], True)
    assert len(kept) == 6


def test_partition_stable_under_shuffle(stick_corpus_250):
    env, demos = stick_corpus_250
    segs = segment_corpus(demos[:40], env.predicates)
    base = partition(segs)
    rng = np.random.default_rng(0)
    shuffled = list(segs)
    rng.shuffle(shuffled)
    other = partition(shuffled)

    def canon(datasets):
        return sorted(tuple(sorted(id(s) for s in ds.segments)) for ds in datasets)

    assert canon(base) == canon(other)


# -- lifting -----------------------------------------------------------------


def test_lift_variable_names_and_maps(stick_corpus_250):
    env, demos = stick_corpus_250
    datasets = partition(segment_corpus(demos, env.predicates))
    for ds in datasets:
        lds = lift(ds)
        assert len(lds.variables) == len(ds.representative.affected_objects)
        # each map is a type-respecting bijection onto the variables
        for seg, omap in zip(lds.segments, lds.object_maps):
            assert sorted(omap.values(), key=lambda v: v.name) == sorted(
                lds.variables, key=lambda v: v.name
            )
            for o, v in omap.items():
                assert o.otype is v.otype
        # lifted effects identical across members (checked inside lift too)
        add0 = lds.lifted_add_effects()
        for seg, omap in zip(lds.segments, lds.object_maps):
            assert frozenset(a.lift(omap) for a in seg.add_effects) == add0


def test_lift_same_variable_for_different_buttons():
    a = _make_segment({GroundAtom(PRESSED, (B[0],))}, set())
    b = _make_segment({GroundAtom(PRESSED, (B[2],))}, set())
    lds = lift(SkillDataset([a, b]))
    assert len(lds.variables) == 1
    v = lds.variables[0]
    assert lds.object_maps[0][B[0]] is v
    assert lds.object_maps[1][B[2]] is v
    assert v.name == "?button0"


def test_lift_excludes_unaffected_objects():
    # A second button appears in the initial atoms but not in the effects.
    bystander = GroundAtom(PRESSED, (B[3],))
    seg = _make_segment({GroundAtom(PRESSED, (B[0],))}, set(), init_atoms={bystander})
    lds = lift(SkillDataset([seg]))
    assert [v.otype for v in lds.variables] == [BTN]
    assert len(lds.variables) == 1
    assert B[3] not in lds.object_maps[0]
