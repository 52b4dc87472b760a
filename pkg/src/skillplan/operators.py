"""Symbolic operators induced from lifted skill datasets.

An operator is a STRIPS-style tuple of typed arguments, preconditions, add
effects, and delete effects.  Effects come straight from lifting; the
preconditions are the intersection over segments of each segment's lifted
initial atoms, after discarding atoms that mention out-of-scope objects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from skillplan.core import (
    AbstractState,
    GroundAtom,
    LiftedAtom,
    Object,
    Predicate,
    Variable,
    apply_substitution,
    sorted_lifted,
    sorted_atoms,
    variable,
)
from skillplan.preprocess import LiftedSkillDataset


class InapplicableOperatorError(RuntimeError):
    """Abstract transition requested where the preconditions do not hold."""


@dataclass(frozen=True)
class Operator:
    name: str
    arguments: tuple[Variable, ...]
    preconditions: frozenset[LiftedAtom]
    add_effects: frozenset[LiftedAtom]
    delete_effects: frozenset[LiftedAtom]

    def __post_init__(self) -> None:
        scope = set(self.arguments)
        for atom in self.preconditions | self.add_effects | self.delete_effects:
            for v in atom.variables:
                if v not in scope:
                    raise ValueError(f"{self.name}: {v.name} is not an argument")
        if self.add_effects & self.delete_effects:
            raise ValueError(f"{self.name}: add and delete effects overlap")

    def rename(self, name: str) -> "Operator":
        return Operator(
            name, self.arguments, self.preconditions, self.add_effects, self.delete_effects
        )


@dataclass(frozen=True)
class GroundOperator:
    operator: Operator
    objects: tuple[Object, ...]
    preconditions: frozenset[GroundAtom]
    add_effects: frozenset[GroundAtom]
    delete_effects: frozenset[GroundAtom]

    def sort_key(self) -> tuple:
        return (self.operator.name, tuple(o.name for o in self.objects))

    def __repr__(self) -> str:
        return f"{self.operator.name}({','.join(o.name for o in self.objects)})"


def learn_operator(lds: LiftedSkillDataset, name: str = "op") -> Operator:
    """Induce one operator from one lifted skill dataset."""
    add = lds.lifted_add_effects()
    delete = lds.lifted_del_effects()
    precond: frozenset[LiftedAtom] | None = None
    for seg, omap in zip(lds.segments, lds.object_maps):
        scope = set(omap)
        lifted = frozenset(
            a.lift(omap)
            for a in seg.init_abstract.atoms
            if all(o in scope for o in a.objects)
        )
        precond = lifted if precond is None else (precond & lifted)
    assert precond is not None
    return Operator(name, lds.variables, precond, add, delete)


def filter_low_data(
    datasets: Sequence[LiftedSkillDataset], enabled: bool = True
) -> list[LiftedSkillDataset]:
    """Drop datasets holding less than 1% of all segments (strict)."""
    datasets = list(datasets)
    if not enabled or not datasets:
        return datasets
    total = sum(len(d.segments) for d in datasets)
    return [d for d in datasets if len(d.segments) >= 0.01 * total]


def ground(op: Operator, objects: Iterable[Object]) -> list[GroundOperator]:
    """All groundings over type-correct, duplicate-free object tuples."""
    objects = sorted(objects)
    pools = [[o for o in objects if o.otype is v.otype] for v in op.arguments]
    out = []
    for combo in itertools.product(*pools):
        if len(set(combo)) != len(combo):
            continue
        sub = dict(zip(op.arguments, combo))
        out.append(
            GroundOperator(
                op,
                tuple(combo),
                frozenset(apply_substitution(op.preconditions, sub)),
                frozenset(apply_substitution(op.add_effects, sub)),
                frozenset(apply_substitution(op.delete_effects, sub)),
            )
        )
    out.sort(key=lambda g: g.sort_key())
    return out


def abstract_transition(s: AbstractState, g: GroundOperator) -> AbstractState:
    """F(s, g) = (s minus delete effects) union add effects."""
    if not g.preconditions <= s.atoms:
        missing = sorted_atoms(g.preconditions - s.atoms)
        raise InapplicableOperatorError(f"{g}: missing {missing}")
    return AbstractState(frozenset((s.atoms - g.delete_effects) | g.add_effects))


def applicable(s: AbstractState, g: GroundOperator) -> bool:
    return g.preconditions <= s.atoms


# ---------------------------------------------------------------------------
# Text form
# ---------------------------------------------------------------------------


def render_operator(op: Operator) -> str:
    def atoms(lst: Iterable[LiftedAtom]) -> str:
        items = ", ".join(str(a) for a in sorted_lifted(lst))
        return f"[{items}]"

    args = ", ".join(f"{v.name}:{v.otype.name}" for v in op.arguments)
    return (
        f"{op.name}:\n"
        f"  arguments: [{args}]\n"
        f"  preconditions: {atoms(op.preconditions)}\n"
        f"  add-effects: {atoms(op.add_effects)}\n"
        f"  delete-effects: {atoms(op.delete_effects)}\n"
    )


def _parse_lifted_atom(
    text: str, preds: Mapping[str, Predicate], vars_by_name: Mapping[str, Variable]
) -> LiftedAtom:
    name, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ValueError(f"malformed atom {text!r}")
    args = [a for a in rest[:-1].split(",") if a]
    if name not in preds:
        raise ValueError(f"unknown predicate {name!r}")
    return LiftedAtom(preds[name], tuple(vars_by_name[a] for a in args))


def parse_operator(text: str, predicates: Iterable[Predicate], types) -> Operator:
    """Inverse of render_operator, given the environment's vocabulary."""
    preds = {p.name: p for p in predicates}
    types_by_name = {t.name: t for t in types}
    lines = [ln.strip() for ln in text.strip().splitlines()]
    name = lines[0].rstrip(":")
    sections: dict[str, str] = {}
    for ln in lines[1:]:
        key, _, val = ln.partition(":")
        sections[key.strip()] = val.strip()

    def inner(s: str) -> list[str]:
        s = s.strip()
        if not (s.startswith("[") and s.endswith("]")):
            raise ValueError(f"malformed section {s!r}")
        body = s[1:-1].strip()
        if not body:
            return []
        return [part.strip() for part in _split_atoms(body)]

    variables = []
    for spec in inner(sections["arguments"]):
        vname, _, tname = spec.partition(":")
        variables.append(variable(vname, types_by_name[tname]))
    vars_by_name = {v.name: v for v in variables}

    def atom_set(key: str) -> frozenset[LiftedAtom]:
        return frozenset(
            _parse_lifted_atom(t, preds, vars_by_name) for t in inner(sections[key])
        )

    return Operator(
        name,
        tuple(variables),
        atom_set("preconditions"),
        atom_set("add-effects"),
        atom_set("delete-effects"),
    )


def _split_atoms(body: str) -> list[str]:
    # Split on commas that are not inside parentheses.
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]
