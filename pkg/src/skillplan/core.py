"""Relational domain types shared across the package.

Environments describe the world with typed objects carrying real feature
vectors.  A fixed set of predicates projects each continuous state onto a
symbolic abstract state (the set of true ground atoms).  Everything here is
an immutable value after construction and safe to share across workers.

Types, objects, predicates, and variables are interned by name so that the
hot comparisons inside search and segmentation are identity checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np


class MalformedSubstitutionError(ValueError):
    """A substitution misses a variable or binds the wrong type."""


class NonInjectiveSubstitutionError(ValueError):
    """A substitution maps two variables onto the same object."""


# ---------------------------------------------------------------------------
# Interned symbols
# ---------------------------------------------------------------------------

_TYPE_REGISTRY: dict[str, "ObjectType"] = {}
_OBJECT_REGISTRY: dict[str, "Object"] = {}
_PREDICATE_REGISTRY: dict[str, "Predicate"] = {}
_VARIABLE_REGISTRY: dict[str, "Variable"] = {}


@dataclass(frozen=True, eq=False)
class ObjectType:
    """A named object type with an ordered tuple of feature names."""

    name: str
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.feature_names:
            raise ValueError(f"type {self.name!r} has no features")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError(f"type {self.name!r} has duplicate features")
        object.__setattr__(
            self, "_index", {f: i for i, f in enumerate(self.feature_names)}
        )

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def feature_index(self, feature: str) -> int:
        return self._index[feature]

    def __repr__(self) -> str:
        return f"ObjectType({self.name})"

    def __lt__(self, other: "ObjectType") -> bool:
        return self.name < other.name


def object_type(name: str, feature_names: Sequence[str]) -> ObjectType:
    """Intern an object type; re-declaration must match exactly."""
    feats = tuple(feature_names)
    existing = _TYPE_REGISTRY.get(name)
    if existing is not None:
        if existing.feature_names != feats:
            raise ValueError(f"type {name!r} re-declared with different features")
        return existing
    otype = ObjectType(name, feats)
    _TYPE_REGISTRY[name] = otype
    return otype


@dataclass(frozen=True, eq=False)
class Object:
    """A named, typed object. Names are unique within a task's object set."""

    name: str
    otype: ObjectType

    def __repr__(self) -> str:
        return self.name

    def __lt__(self, other: "Object") -> bool:
        return self.name < other.name


def obj(name: str, otype: ObjectType) -> Object:
    existing = _OBJECT_REGISTRY.get(name)
    if existing is not None:
        if existing.otype is not otype:
            raise ValueError(f"object {name!r} re-declared with different type")
        return existing
    o = Object(name, otype)
    _OBJECT_REGISTRY[name] = o
    return o


@dataclass(frozen=True, eq=False)
class Variable:
    """A typed placeholder for an object; names begin with '?'."""

    name: str
    otype: ObjectType

    def __post_init__(self) -> None:
        if not self.name.startswith("?"):
            raise ValueError(f"variable name {self.name!r} must start with '?'")

    def __repr__(self) -> str:
        return self.name

    def __lt__(self, other: "Variable") -> bool:
        return self.name < other.name


def variable(name: str, otype: ObjectType) -> Variable:
    existing = _VARIABLE_REGISTRY.get(name)
    if existing is not None:
        if existing.otype is not otype:
            raise ValueError(f"variable {name!r} re-declared with different type")
        return existing
    v = Variable(name, otype)
    _VARIABLE_REGISTRY[name] = v
    return v


@dataclass(frozen=True, eq=False)
class Predicate:
    """A named boolean relation over typed objects.

    The classifier is a pure function of (state, objects) and must be
    deterministic on identical inputs.  ``is_contact`` marks the predicates
    whose truth-value changes define segment switch points.
    """

    name: str
    arg_types: tuple[ObjectType, ...]
    classifier: Callable[["State", tuple[Object, ...]], bool]
    is_contact: bool = False

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    def holds(self, state: "State", objects: tuple[Object, ...]) -> bool:
        if len(objects) != self.arity:
            raise ValueError(f"{self.name} expects {self.arity} objects")
        for o, t in zip(objects, self.arg_types):
            if o.otype is not t:
                raise TypeError(f"{self.name}: {o.name} is not of type {t.name}")
        return bool(self.classifier(state, objects))

    def __repr__(self) -> str:
        return self.name

    def __lt__(self, other: "Predicate") -> bool:
        return self.name < other.name


def predicate(
    name: str,
    arg_types: Sequence[ObjectType],
    classifier: Callable[["State", tuple[Object, ...]], bool],
    is_contact: bool = False,
) -> Predicate:
    # Keyed by full signature: environments may reuse a natural name like
    # HandEmpty over their own types without colliding.
    key = name + "/" + ",".join(t.name for t in arg_types)
    existing = _PREDICATE_REGISTRY.get(key)
    if existing is not None:
        return existing
    p = Predicate(name, tuple(arg_types), classifier, is_contact)
    _PREDICATE_REGISTRY[key] = p
    return p


def clear_registries() -> None:
    """Forget all interned symbols.  Test-only escape hatch."""
    _TYPE_REGISTRY.clear()
    _OBJECT_REGISTRY.clear()
    _PREDICATE_REGISTRY.clear()
    _VARIABLE_REGISTRY.clear()


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundAtom:
    """A predicate applied to concrete objects."""

    predicate: Predicate
    objects: tuple[Object, ...]

    def __post_init__(self) -> None:
        if len(self.objects) != self.predicate.arity:
            raise ValueError(f"bad arity for {self.predicate.name}")
        for o, t in zip(self.objects, self.predicate.arg_types):
            if o.otype is not t:
                raise TypeError(
                    f"{self.predicate.name}: {o.name} is not of type {t.name}"
                )

    def sort_key(self) -> tuple:
        return (self.predicate.name, tuple(o.name for o in self.objects))

    def lift(self, mapping: Mapping[Object, Variable]) -> "LiftedAtom":
        return LiftedAtom(self.predicate, tuple(mapping[o] for o in self.objects))

    def __repr__(self) -> str:
        return f"{self.predicate.name}({','.join(o.name for o in self.objects)})"


@dataclass(frozen=True)
class LiftedAtom:
    """A predicate applied to typed variables."""

    predicate: Predicate
    variables: tuple[Variable, ...]

    def __post_init__(self) -> None:
        if len(self.variables) != self.predicate.arity:
            raise ValueError(f"bad arity for {self.predicate.name}")
        for v, t in zip(self.variables, self.predicate.arg_types):
            if v.otype is not t:
                raise TypeError(
                    f"{self.predicate.name}: {v.name} is not of type {t.name}"
                )

    def sort_key(self) -> tuple:
        return (self.predicate.name, tuple(v.name for v in self.variables))

    def ground(self, sub: Mapping[Variable, Object]) -> GroundAtom:
        try:
            objects = tuple(sub[v] for v in self.variables)
        except KeyError as e:
            raise MalformedSubstitutionError(f"missing binding for {e.args[0]}")
        return GroundAtom(self.predicate, objects)

    def __repr__(self) -> str:
        return f"{self.predicate.name}({','.join(v.name for v in self.variables)})"


def sorted_atoms(atoms: Iterable[GroundAtom]) -> list[GroundAtom]:
    """Canonical atom order: predicate name, then object names."""
    return sorted(atoms, key=lambda a: a.sort_key())


def sorted_lifted(atoms: Iterable[LiftedAtom]) -> list[LiftedAtom]:
    return sorted(atoms, key=lambda a: a.sort_key())


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class State:
    """An assignment of objects to feature vectors (64-bit floats)."""

    data: dict[Object, np.ndarray]

    def __post_init__(self) -> None:
        for o, vec in self.data.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (o.otype.dim,):
                raise ValueError(
                    f"{o.name}: expected {o.otype.dim} features, got {arr.shape}"
                )
            arr.setflags(write=False)
            self.data[o] = arr

    @property
    def objects(self) -> list[Object]:
        return sorted(self.data)

    def __getitem__(self, o: Object) -> np.ndarray:
        return self.data[o]

    def get(self, o: Object, feature: str) -> float:
        return float(self.data[o][o.otype.feature_index(feature)])

    @classmethod
    def _trusted(cls, data: dict[Object, np.ndarray]) -> "State":
        """Construct without per-object validation (hot simulation path)."""
        s = object.__new__(cls)
        object.__setattr__(s, "data", data)
        return s

    def updated(self, changes: Mapping[Object, np.ndarray]) -> "State":
        """Return a new state with the given object vectors replaced."""
        new = dict(self.data)
        for o, vec in changes.items():
            if o not in new:
                raise KeyError(f"unknown object {o.name}")
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (o.otype.dim,):
                raise ValueError(f"{o.name}: wrong vector shape {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            new[o] = arr
        return State._trusted(new)

    def allclose(self, other: "State", atol: float = 1e-9) -> bool:
        if set(self.data) != set(other.data):
            return False
        return all(
            np.allclose(self.data[o], other.data[o], rtol=0.0, atol=atol)
            for o in self.data
        )

    def copy(self) -> "State":
        return State({o: v.copy() for o, v in self.data.items()})


@dataclass(frozen=True, eq=False)
class Action:
    """A continuous action vector."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("action must be a flat vector")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"Action({np.array2string(self.values, precision=4)})"


@dataclass(frozen=True)
class AbstractState:
    """The set of ground atoms that hold true; absent atoms are false."""

    atoms: frozenset[GroundAtom]

    def __contains__(self, atom: GroundAtom) -> bool:
        return atom in self.atoms

    def __iter__(self):
        return iter(sorted_atoms(self.atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    def restrict(self, predicates: Iterable[Predicate]) -> "AbstractState":
        preds = set(predicates)
        return AbstractState(
            frozenset(a for a in self.atoms if a.predicate in preds)
        )

    def __repr__(self) -> str:
        inner = ", ".join(str(a) for a in sorted_atoms(self.atoms))
        return f"{{{inner}}}"


@dataclass(frozen=True, eq=False)
class Task:
    """Objects, an initial state, a goal atom set, and a horizon."""

    objects: tuple[Object, ...]
    init: State
    goal: frozenset[GroundAtom]
    horizon: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(sorted(self.objects)))
        object.__setattr__(self, "goal", frozenset(self.goal))
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        names = [o.name for o in self.objects]
        if len(set(names)) != len(names):
            raise ValueError("duplicate object names in task")
        if set(self.init.data) != set(self.objects):
            raise ValueError("initial state must cover exactly the task objects")
        for atom in self.goal:
            for o in atom.objects:
                if o not in self.init.data:
                    raise ValueError(f"goal references unknown object {o.name}")


@dataclass(frozen=True, eq=False)
class Demonstration:
    """A task together with a goal-achieving trajectory through it."""

    task: Task
    actions: tuple[Action, ...]
    states: tuple[State, ...]

    def __post_init__(self) -> None:
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("need exactly one more state than action")
        if len(self.actions) > self.task.horizon:
            raise ValueError("demonstration exceeds the task horizon")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def _type_correct_tuples(
    pred: Predicate, objects: Sequence[Object]
) -> Iterable[tuple[Object, ...]]:
    pools = [
        [o for o in objects if o.otype is t] for t in pred.arg_types
    ]
    return itertools.product(*pools)


def abstract(
    x: State,
    preds: Iterable[Predicate],
    objects: Sequence[Object] | None = None,
) -> AbstractState:
    """Project a continuous state onto the set of true ground atoms.

    Enumerates every type-correct object tuple for every predicate and keeps
    the atoms whose classifier returns true.  Deterministic.
    """
    objs = sorted(x.data) if objects is None else sorted(objects)
    atoms = set()
    for pred in sorted(preds):
        for tup in _type_correct_tuples(pred, objs):
            if pred.classifier(x, tup):
                atoms.add(GroundAtom(pred, tup))
    return AbstractState(frozenset(atoms))


def goal_holds(goal: Iterable[GroundAtom], s: AbstractState) -> bool:
    """True iff every goal atom is in the abstract state."""
    return all(a in s.atoms for a in goal)


def apply_substitution(
    atoms: Iterable[LiftedAtom], sub: Mapping[Variable, Object]
) -> set[GroundAtom]:
    """Ground a set of lifted atoms through an injective substitution."""
    for v, o in sub.items():
        if v.otype is not o.otype:
            raise MalformedSubstitutionError(
                f"{v.name} of type {v.otype.name} bound to {o.name}"
            )
    images = list(sub.values())
    if len(set(images)) != len(images):
        raise NonInjectiveSubstitutionError("two variables share an image")
    atoms = set(atoms)
    grounded = {a.ground(sub) for a in atoms}
    if len(grounded) != len(atoms):
        raise NonInjectiveSubstitutionError("grounding collapsed distinct atoms")
    return grounded
