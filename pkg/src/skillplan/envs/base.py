"""Environment interface shared by all simulators."""

from __future__ import annotations

import abc
from typing import Sequence

import numpy as np

from skillplan.core import (
    AbstractState,
    Action,
    Demonstration,
    ObjectType,
    Predicate,
    State,
    Task,
    abstract,
)


class ScriptedPolicyFailure(RuntimeError):
    """The handcrafted demonstrator could not solve a sampled task."""


class Environment(abc.ABC):
    """A deterministic simulator bundle.

    Instances hold no mutable state: the transition function, task sampler,
    and scripted demonstrator are all pure given their arguments, so one
    instance may be shared freely across workers.
    """

    name: str
    action_dim: int

    @property
    @abc.abstractmethod
    def types(self) -> tuple[ObjectType, ...]:
        ...

    @property
    @abc.abstractmethod
    def predicates(self) -> tuple[Predicate, ...]:
        ...

    @property
    def contact_predicates(self) -> tuple[Predicate, ...]:
        return tuple(p for p in self.predicates if p.is_contact)

    @abc.abstractmethod
    def transition(self, x: State, u: Action) -> State:
        """Deterministic next state; out-of-range deltas are clipped."""

    @abc.abstractmethod
    def sample_task(self, seed: int, profile: str) -> Task:
        """Sample a feasible task; deterministic in (seed, profile)."""

    @abc.abstractmethod
    def scripted_policy(self, task: Task) -> Demonstration:
        """Solve the task with the handcrafted demonstrator."""

    def abstract(self, x: State, extra_predicates: Sequence[Predicate] = ()) -> AbstractState:
        return abstract(x, tuple(self.predicates) + tuple(extra_predicates))

    def check_action(self, u: Action) -> None:
        if len(u) != self.action_dim:
            raise ValueError(
                f"{self.name} expects {self.action_dim}-dim actions, got {len(u)}"
            )

    def rollout(self, x0: State, actions: Sequence[Action]) -> list[State]:
        """Replay actions through the transition function."""
        states = [x0]
        for u in actions:
            states.append(self.transition(states[-1], u))
        return states

    def replay_valid(self, demo: Demonstration, atol: float = 1e-9) -> bool:
        """Check the stored trajectory against re-simulation and the goal."""
        x = demo.states[0]
        if not demo.task.init.allclose(x, atol=atol):
            return False
        for u, x_next in zip(demo.actions, demo.states[1:]):
            x = self.transition(x, u)
            if not x.allclose(x_next, atol=atol):
                return False
        final = self.abstract(demo.states[-1])
        return all(a in final.atoms for a in demo.task.goal)


def clip_step(dx: float, dy: float, max_step: float) -> tuple[float, float]:
    """Clip a planar delta to a maximum magnitude (straight-line step)."""
    norm = float(np.hypot(dx, dy))
    if norm <= max_step or norm == 0.0:
        return float(dx), float(dy)
    scale = max_step / norm
    return float(dx * scale), float(dy * scale)
