"""Irrelevant-object and irrelevant-predicate injection for Cover.

Extra blocks are parked above the table (never colliding, never in goals)
but share the block type, so nothing filters them out by type alone.
Injected predicates come in three flavors: static (constant per object),
dynamic (threshold on the gripper height), and random (a seeded coin flip
that is a pure function of the full input, so classifiers stay
deterministic on identical inputs).
"""

from __future__ import annotations

import hashlib

import numpy as np

from skillplan.core import Object, Predicate, State, Task, obj, predicate
from skillplan.envs.cover import (
    BLOCK_TYPE,
    GRASP_FREE,
    GRIPPER_TYPE,
    Y_HI,
)
from skillplan.util import rng_from

OFF_TABLE_Y = Y_HI  # parked height: unreachable by picks, never Covers


def _parity(*parts: object) -> bool:
    text = "\x1f".join(repr(p) for p in parts)
    return bool(hashlib.sha256(text.encode()).digest()[0] & 1)


def _static_classifier(index: int, seed: int):
    def classify(x: State, objects: tuple[Object, ...]) -> bool:
        return _parity("static", seed, index, tuple(o.name for o in objects))

    return classify


def _dynamic_classifier(tau: float):
    def classify(x: State, objects: tuple[Object, ...]) -> bool:
        return x.get(objects[0], "y") > tau

    return classify


def _random_classifier(index: int, seed: int):
    def classify(x: State, objects: tuple[Object, ...]) -> bool:
        payload = tuple(
            (o.name, x[o].tobytes()) for o in sorted(x.data)
        )
        return _parity("random", seed, index, tuple(o.name for o in objects), payload)

    return classify


def irrelevant_predicates(
    n_static: int, n_dynamic: int, n_random: int, seed: int
) -> tuple[Predicate, ...]:
    rng = rng_from("irrelevant-preds", seed)
    preds = []
    for i in range(n_static):
        preds.append(
            predicate(f"IrrStatic{i}", (BLOCK_TYPE,), _static_classifier(i, seed))
        )
    for i in range(n_dynamic):
        tau = float(rng.uniform(0.05, 0.25))
        preds.append(
            predicate(f"IrrDyn{i}", (GRIPPER_TYPE,), _dynamic_classifier(tau))
        )
    for i in range(n_random):
        preds.append(
            predicate(f"IrrRand{i}", (BLOCK_TYPE,), _random_classifier(i, seed))
        )
    return tuple(preds)


def inject_irrelevant(
    task: Task,
    n_objects: int = 0,
    n_static_preds: int = 0,
    n_dynamic_preds: int = 0,
    n_random_preds: int = 0,
    seed: int = 0,
) -> tuple[Task, tuple[Predicate, ...]]:
    """Return the augmented task and the set of injected predicates."""
    if not any(o.otype is BLOCK_TYPE for o in task.objects):
        raise ValueError("irrelevant injection is defined for the cover environment")
    preds = irrelevant_predicates(n_static_preds, n_dynamic_preds, n_random_preds, seed)
    if n_objects == 0:
        return task, preds
    rng = rng_from("irrelevant-objects", seed)
    data = dict(task.init.data)
    extra = []
    for i in range(n_objects):
        b = obj(f"irrelevant_block{i}", BLOCK_TYPE)
        extra.append(b)
        height = float(rng.uniform(0.03, 0.06))
        width = float(rng.uniform(0.07, 0.10))
        bx = float(rng.uniform(0.05, 0.95))
        data[b] = np.array([height, width, bx, OFF_TABLE_Y, GRASP_FREE])
    new_task = Task(
        tuple(task.objects) + tuple(extra),
        State(data),
        task.goal,
        task.horizon,
    )
    return new_task, preds
