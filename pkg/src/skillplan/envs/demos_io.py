"""Line-delimited JSON storage for demonstration datasets.

The first line is a header record naming the environment; every following
line is one demonstration.  Floats are serialized with full round-trip
precision, so regenerating a file from the same seed is byte-identical and
replaying a loaded trajectory reproduces the stored states exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from skillplan.core import (
    Action,
    Demonstration,
    GroundAtom,
    Object,
    State,
    Task,
    obj,
)
from skillplan.envs.base import Environment

FORMAT_VERSION = 1


class DemoFormatError(ValueError):
    """The demos file is malformed or fails verification."""


def _floats(vec: np.ndarray) -> list[float]:
    return [float(v) for v in vec]


def demo_to_record(demo: Demonstration) -> dict:
    task = demo.task
    objects = list(task.objects)
    return {
        "kind": "demo",
        "task": {
            "objects": [{"name": o.name, "type": o.otype.name} for o in objects],
            "init": [_floats(task.init[o]) for o in objects],
            "goal": [str(a) for a in sorted(task.goal, key=lambda a: a.sort_key())],
            "horizon": task.horizon,
        },
        "states": [[_floats(x[o]) for o in objects] for x in demo.states],
        "actions": [_floats(u.values) for u in demo.actions],
    }


def parse_atom_text(text: str, env: Environment, objects_by_name: dict[str, Object]) -> GroundAtom:
    name, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise DemoFormatError(f"malformed atom {text!r}")
    args = rest[:-1].split(",") if rest != ")" else []
    preds = {p.name: p for p in env.predicates}
    if name not in preds:
        raise DemoFormatError(f"unknown predicate {name!r}")
    try:
        objs = tuple(objects_by_name[a] for a in args if a)
    except KeyError as e:
        raise DemoFormatError(f"unknown object {e.args[0]!r} in atom {text!r}")
    return GroundAtom(preds[name], objs)


def record_to_demo(record: dict, env: Environment) -> Demonstration:
    tinfo = record["task"]
    types = {t.name: t for t in env.types}
    objects: list[Object] = []
    for entry in tinfo["objects"]:
        if entry["type"] not in types:
            raise DemoFormatError(f"unknown type {entry['type']!r}")
        objects.append(obj(entry["name"], types[entry["type"]]))
    by_name = {o.name: o for o in objects}

    def to_state(rows: list[list[float]]) -> State:
        return State({o: np.array(row, dtype=np.float64) for o, row in zip(objects, rows)})

    init = to_state(tinfo["init"])
    goal = frozenset(parse_atom_text(t, env, by_name) for t in tinfo["goal"])
    task = Task(tuple(objects), init, goal, int(tinfo["horizon"]))
    states = tuple(to_state(rows) for rows in record["states"])
    actions = tuple(Action(np.array(row, dtype=np.float64)) for row in record["actions"])
    return Demonstration(task, actions, states)


def save_demos(path: str | Path, env: Environment, demos: Iterable[Demonstration]) -> int:
    demos = list(demos)
    header = {
        "kind": "header",
        "format": FORMAT_VERSION,
        "environment": env.name,
        "action_dim": env.action_dim,
        "count": len(demos),
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for demo in demos:
            rec = demo_to_record(demo)
            f.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return len(demos)


def append_demo(path: str | Path, env: Environment, demo: Demonstration) -> None:
    """Append one record, writing a header first if the file is new."""
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        save_demos(path, env, [demo])
        return
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(demo_to_record(demo), sort_keys=True, separators=(",", ":")) + "\n")


def iter_demos(path: str | Path, env: Environment, verify: bool = True) -> Iterator[Demonstration]:
    with open(path, encoding="utf-8") as f:
        header_line = f.readline()
        if not header_line:
            raise DemoFormatError("empty demos file")
        header = json.loads(header_line)
        if header.get("kind") != "header":
            raise DemoFormatError("first record must be the header")
        if header.get("environment") != env.name:
            raise DemoFormatError(
                f"demos recorded for {header.get('environment')!r}, not {env.name!r}"
            )
        for i, line in enumerate(f):
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("kind") != "demo":
                raise DemoFormatError(f"record {i}: unexpected kind")
            demo = record_to_demo(record, env)
            if verify and not env.replay_valid(demo):
                raise DemoFormatError(f"record {i}: replay verification failed")
            yield demo


def load_demos(path: str | Path, env: Environment, verify: bool = True) -> list[Demonstration]:
    return list(iter_demos(path, env, verify=verify))
