"""Turn raw demonstrations into lifted skill datasets.

Demonstrations are cut into segments wherever a contact-flagged ground atom
changes truth value.  Segments whose effects match up to an injective typed
object substitution are grouped into one skill dataset, and the affected
objects of each dataset are lifted to shared typed variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from skillplan.core import (
    AbstractState,
    Action,
    Demonstration,
    GroundAtom,
    LiftedAtom,
    Object,
    Predicate,
    State,
    Variable,
    abstract,
    sorted_atoms,
    variable,
)


@dataclass(frozen=True, eq=False)
class Segment:
    """A contiguous slice of a demonstration between contact switch points.

    ``states`` includes both boundary states, so consecutive segments share
    one state.  Effects compare the abstract boundary states only; atoms may
    flip freely in between as long as no contact atom changes.
    """

    states: tuple[State, ...]
    actions: tuple[Action, ...]
    init_abstract: AbstractState
    final_abstract: AbstractState
    add_effects: frozenset[GroundAtom]
    del_effects: frozenset[GroundAtom]

    def __post_init__(self) -> None:
        if len(self.actions) != len(self.states) - 1 or len(self.actions) < 1:
            raise ValueError("segment needs |actions| = |states| - 1 >= 1")

    @property
    def affected_objects(self) -> tuple[Object, ...]:
        objs = {
            o
            for atom in self.add_effects | self.del_effects
            for o in atom.objects
        }
        return tuple(sorted(objs))

    def has_effects(self) -> bool:
        return bool(self.add_effects or self.del_effects)


@dataclass
class SkillDataset:
    """Segments with equivalent effects; the first member is the representative."""

    segments: list[Segment]

    @property
    def representative(self) -> Segment:
        return self.segments[0]

    def __len__(self) -> int:
        return len(self.segments)


@dataclass
class LiftedSkillDataset:
    """A skill dataset plus variables and per-segment object-to-variable maps."""

    dataset: SkillDataset
    variables: tuple[Variable, ...]
    object_maps: list[dict[Object, Variable]]

    @property
    def segments(self) -> list[Segment]:
        return self.dataset.segments

    def lifted_add_effects(self) -> frozenset[LiftedAtom]:
        rep, m = self.dataset.representative, self.object_maps[0]
        return frozenset(a.lift(m) for a in rep.add_effects)

    def lifted_del_effects(self) -> frozenset[LiftedAtom]:
        rep, m = self.dataset.representative, self.object_maps[0]
        return frozenset(a.lift(m) for a in rep.del_effects)


def _make_segment(
    states: Sequence[State],
    actions: Sequence[Action],
    atoms: Sequence[AbstractState],
) -> Segment:
    init, final = atoms[0], atoms[-1]
    return Segment(
        states=tuple(states),
        actions=tuple(actions),
        init_abstract=init,
        final_abstract=final,
        add_effects=frozenset(final.atoms - init.atoms),
        del_effects=frozenset(init.atoms - final.atoms),
    )


def segment(
    demo: Demonstration,
    preds: Iterable[Predicate],
    single_step: bool = False,
) -> list[Segment]:
    """Cut one demonstration at contact-atom switch points.

    With ``single_step`` every transition becomes its own segment (the
    pass-through ablation); otherwise a new segment starts whenever the
    truth value of a contact-flagged ground atom differs from the previous
    state.  Segments tile the demonstration exactly.
    """
    preds = tuple(sorted(preds))
    if not demo.actions:
        return []
    atom_seq = [abstract(x, preds) for x in demo.states]
    n = len(demo.actions)
    if single_step:
        cuts = list(range(n + 1))
    else:
        contact = [p for p in preds if p.is_contact]
        contact_seq = [s.restrict(contact) for s in atom_seq]
        cuts = [0]
        for t in range(1, n + 1):
            if contact_seq[t] != contact_seq[t - 1]:
                cuts.append(t)
        if cuts[-1] != n:
            cuts.append(n)
    out = []
    for a, b in zip(cuts, cuts[1:]):
        out.append(
            _make_segment(
                demo.states[a : b + 1], demo.actions[a:b], atom_seq[a : b + 1]
            )
        )
    return out


def segment_corpus(
    demos: Iterable[Demonstration],
    preds: Iterable[Predicate],
    single_step: bool = False,
) -> list[Segment]:
    segments = []
    for demo in demos:
        segments.extend(segment(demo, preds, single_step=single_step))
    return segments


# ---------------------------------------------------------------------------
# Effect equivalence up to object substitution
# ---------------------------------------------------------------------------


def _atoms_by_pred(atoms: frozenset[GroundAtom]) -> dict[Predicate, list[GroundAtom]]:
    buckets: dict[Predicate, list[GroundAtom]] = {}
    for a in sorted_atoms(atoms):
        buckets.setdefault(a.predicate, []).append(a)
    return buckets


def _apply(atoms: frozenset[GroundAtom], m: dict[Object, Object]) -> frozenset[GroundAtom]:
    return frozenset(
        GroundAtom(a.predicate, tuple(m[o] for o in a.objects)) for a in atoms
    )


def equivalent(a: Segment, b: Segment) -> dict[Object, Object] | None:
    """Injective typed map from a's affected objects to b's matching effects.

    Returns the lexicographically smallest such map (images of a's objects
    in canonical order compared by name) or None if no map exists.  The
    search backtracks over object images, pruning with per-predicate effect
    counts, which stays trivial at the tiny affected-set sizes seen here.
    """
    objs_a, objs_b = a.affected_objects, b.affected_objects
    if len(objs_a) != len(objs_b):
        return None
    if len(a.add_effects) != len(b.add_effects):
        return None
    if len(a.del_effects) != len(b.del_effects):
        return None
    for eff_a, eff_b in ((a.add_effects, b.add_effects), (a.del_effects, b.del_effects)):
        count_a = {p: len(v) for p, v in _atoms_by_pred(eff_a).items()}
        count_b = {p: len(v) for p, v in _atoms_by_pred(eff_b).items()}
        if count_a != count_b:
            return None

    mapping: dict[Object, Object] = {}
    used: set[Object] = set()

    def extend(idx: int) -> bool:
        if idx == len(objs_a):
            return _apply(a.add_effects, mapping) == b.add_effects and _apply(
                a.del_effects, mapping
            ) == b.del_effects
        o = objs_a[idx]
        for cand in objs_b:
            if cand in used or cand.otype is not o.otype:
                continue
            mapping[o] = cand
            used.add(cand)
            if extend(idx + 1):
                return True
            del mapping[o]
            used.discard(cand)
        return False

    if extend(0):
        return dict(mapping)
    return None


def partition(
    segments: Sequence[Segment], keep_empty_effects: bool = False
) -> list[SkillDataset]:
    """Group segments into skill datasets by effect equivalence.

    Segments with no abstract change are dropped unless ``keep_empty_effects``
    (the pass-through ablation keeps them).
    """
    datasets: list[SkillDataset] = []
    for seg in segments:
        if not seg.has_effects() and not keep_empty_effects:
            continue
        for ds in datasets:
            if equivalent(seg, ds.representative) is not None:
                ds.segments.append(seg)
                break
        else:
            datasets.append(SkillDataset([seg]))
    return datasets


# ---------------------------------------------------------------------------
# Lifting
# ---------------------------------------------------------------------------


def _canonical_variable_order(rep: Segment) -> list[Object]:
    """Affected objects sorted by (type name, first appearance in effects)."""
    ordered_atoms = sorted_atoms(rep.add_effects | rep.del_effects)
    first_seen: dict[Object, int] = {}
    pos = 0
    for atom in ordered_atoms:
        for o in atom.objects:
            if o not in first_seen:
                first_seen[o] = pos
                pos += 1
    return sorted(rep.affected_objects, key=lambda o: (o.otype.name, first_seen[o]))


def lift(ds: SkillDataset) -> LiftedSkillDataset:
    """Replace each dataset's affected objects with shared typed variables."""
    if not ds.segments:
        raise ValueError("cannot lift an empty dataset")
    rep = ds.representative
    ordered = _canonical_variable_order(rep)
    counters: dict[str, int] = {}
    rep_map: dict[Object, Variable] = {}
    for o in ordered:
        k = counters.get(o.otype.name, 0)
        counters[o.otype.name] = k + 1
        rep_map[o] = variable(f"?{o.otype.name}{k}", o.otype)
    variables = tuple(rep_map[o] for o in ordered)

    maps: list[dict[Object, Variable]] = []
    for seg in ds.segments:
        delta = equivalent(seg, rep)
        if delta is None:
            raise RuntimeError("segment does not match its dataset representative")
        maps.append({o: rep_map[img] for o, img in delta.items()})

    lds = LiftedSkillDataset(ds, variables, maps)
    # Every member must lift to identical effect sets.
    expect_add = lds.lifted_add_effects()
    expect_del = lds.lifted_del_effects()
    for seg, m in zip(ds.segments, maps):
        if frozenset(a.lift(m) for a in seg.add_effects) != expect_add:
            raise RuntimeError("lifted add effects disagree within a dataset")
        if frozenset(a.lift(m) for a in seg.del_effects) != expect_del:
            raise RuntimeError("lifted delete effects disagree within a dataset")
    return lds


def preprocess_corpus(
    demos: Iterable[Demonstration],
    preds: Iterable[Predicate],
    single_step: bool = False,
) -> list[LiftedSkillDataset]:
    segments = segment_corpus(demos, preds, single_step=single_step)
    datasets = partition(segments, keep_empty_effects=single_step)
    return [lift(ds) for ds in datasets]
