"""Bilevel planning: top-k abstract search plus sampler-driven refinement.

The outer loop streams abstract plans (ground-skill sequences whose induced
abstract-state chain reaches the goal) from an A* search guided by the
additive delete-relaxation heuristic.  The search runs over the tree of
ground-skill sequences and keeps going past the first goal, so plans come
out in nondecreasing length and pairwise distinct.  The inner loop refines
each abstract plan by sampling subgoals and rolling out policies with
depth-first backtracking, at most ``n_samples`` attempts per step.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from skillplan.core import (
    AbstractState,
    Action,
    GroundAtom,
    Object,
    Predicate,
    State,
    Task,
    abstract,
    goal_holds,
)
from skillplan.operators import GroundOperator, abstract_transition, applicable, ground
from skillplan.skills import ContactProbe, Skill, execute_policy
from skillplan.util import rng_from

INF = float("inf")


@dataclass
class PlannerConfig:
    n_abstract: int = 8
    n_samples: int = 10
    node_budget: int = 1_000_000
    timeout_s: float = 300.0

    def __post_init__(self) -> None:
        if min(self.n_abstract, self.n_samples, self.node_budget) <= 0:
            raise ValueError("planner limits must be positive")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class GroundSkill:
    skill: Skill
    objects: tuple[Object, ...]
    op: GroundOperator

    def __repr__(self) -> str:
        return f"{self.skill.name}({','.join(o.name for o in self.objects)})"


@dataclass
class AbstractPlan:
    steps: tuple[GroundSkill, ...]
    states: tuple[AbstractState, ...]

    def signature(self) -> tuple:
        return tuple((gs.skill.name, tuple(o.name for o in gs.objects)) for gs in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


@dataclass
class PlanMetrics:
    solved: bool = False
    wall_time_s: float = 0.0
    nodes_created: int = 0
    nodes_expanded: int = 0
    plans_tried: int = 0
    samples_drawn: int = 0
    solution_length: int = 0


def ground_skills(skills: Sequence[Skill], objects: Iterable[Object]) -> list[GroundSkill]:
    out = []
    for skill in sorted(skills, key=lambda s: s.name):
        for gop in ground(skill.operator, objects):
            out.append(GroundSkill(skill, gop.objects, gop))
    return out


# ---------------------------------------------------------------------------
# Heuristic
# ---------------------------------------------------------------------------


def _relaxed_costs(
    s: AbstractState, ops: Sequence[GroundOperator], combine
) -> dict[GroundAtom, float]:
    costs: dict[GroundAtom, float] = {a: 0.0 for a in s.atoms}
    changed = True
    while changed:
        changed = False
        for op in ops:
            total = 1.0
            acc = 0.0
            for p in op.preconditions:
                c = costs.get(p)
                if c is None:
                    total = INF
                    break
                acc = combine(acc, c)
            if total == INF:
                continue
            total += acc
            for a in op.add_effects:
                if total < costs.get(a, INF):
                    costs[a] = total
                    changed = True
    return costs


def heuristic(
    s: AbstractState, goal: Iterable[GroundAtom], ops: Sequence[GroundOperator]
) -> float:
    """Additive delete-relaxation cost: fixpoint ignoring delete effects."""
    costs = _relaxed_costs(s, ops, lambda a, b: a + b)
    return sum(costs.get(g, INF) for g in goal)


def admissible_bound(
    s: AbstractState, goal: frozenset[GroundAtom], ops: Sequence[GroundOperator]
) -> float:
    """A lower bound on remaining plan length (used to order emissions).

    Max of the max-relaxation cost and a goal-count bound (missing goal
    atoms divided by the most goal atoms any single operator can add).
    """
    missing = goal - s.atoms
    if not missing:
        return 0.0
    costs = _relaxed_costs(s, ops, max)
    h_max = max(costs.get(g, INF) for g in missing)
    per_op = max((len(op.add_effects & goal) for op in ops), default=0)
    h_gc = INF if per_op == 0 else float(np.ceil(len(missing) / per_op))
    return max(h_max, h_gc)


# ---------------------------------------------------------------------------
# Top-k abstract plans
# ---------------------------------------------------------------------------


@dataclass
class _Node:
    state: AbstractState
    parent: "_Node | None"
    step: GroundSkill | None
    depth: int


def topk_abstract_plans(
    s0: AbstractState,
    goal: frozenset[GroundAtom],
    gskills: Sequence[GroundSkill],
    config: PlannerConfig,
    max_length: int | None = None,
    deadline: float | None = None,
    metrics: PlanMetrics | None = None,
) -> Iterator[AbstractPlan]:
    """Stream up to ``n_abstract`` distinct plans in nondecreasing length.

    A* over the tree of ground-skill sequences, ordered by g + h_add and
    continuing past goal nodes.  Because h_add may overestimate, a popped
    goal plan is held in a buffer until an admissible bound proves that no
    shorter plan remains in the frontier; that keeps emitted lengths
    nondecreasing without giving up the heuristic guidance.
    """
    metrics = metrics if metrics is not None else PlanMetrics()
    ops = [gs.op for gs in gskills]
    h_cache: dict[AbstractState, float] = {}
    bound_cache: dict[AbstractState, float] = {}

    def h_of(s: AbstractState) -> float:
        if s not in h_cache:
            h_cache[s] = heuristic(s, goal, ops)
        return h_cache[s]

    def bound_of(s: AbstractState) -> float:
        if s not in bound_cache:
            bound_cache[s] = admissible_bound(s, goal, ops)
        return bound_cache[s]

    counter = itertools.count()
    h0 = h_of(s0)
    if h0 == INF:
        return
    heap: list[tuple[float, float, int, _Node]] = []
    # Parallel frontier bounds: (g + admissible bound, node id); entries die
    # lazily when their node is popped from the main heap.
    frontier: list[tuple[float, int]] = []
    alive: set[int] = set()
    buffered: list[tuple[int, int, AbstractPlan]] = []  # (length, seq, plan)

    def push(node: _Node) -> None:
        nid = next(counter)
        h = h_of(node.state)
        if h == INF:
            return
        heapq.heappush(heap, (node.depth + h, h, nid, node))
        heapq.heappush(frontier, (node.depth + bound_of(node.state), nid))
        alive.add(nid)
        metrics.nodes_created += 1

    def frontier_bound() -> float:
        while frontier and frontier[0][1] not in alive:
            heapq.heappop(frontier)
        return frontier[0][0] if frontier else INF

    push(_Node(s0, None, None, 0))
    emitted: set[tuple] = set()
    n_yielded = 0
    last_len = 0
    expansions = 0

    def ready(flush: bool) -> Iterator[AbstractPlan]:
        nonlocal n_yielded, last_len
        while buffered and n_yielded < config.n_abstract:
            length, _, plan = buffered[0]
            if not flush and length > frontier_bound():
                return
            heapq.heappop(buffered)
            assert length >= last_len, "plan lengths must be nondecreasing"
            last_len = length
            n_yielded += 1
            yield plan

    while heap and n_yielded < config.n_abstract:
        if deadline is not None and time.monotonic() > deadline:
            break
        f, h, nid, node = heapq.heappop(heap)
        alive.discard(nid)
        if goal_holds(goal, node.state):
            steps: list[GroundSkill] = []
            states: list[AbstractState] = [node.state]
            cur = node
            while cur.parent is not None:
                steps.append(cur.step)
                cur = cur.parent
                states.append(cur.state)
            plan = AbstractPlan(tuple(reversed(steps)), tuple(reversed(states)))
            sig = plan.signature()
            if sig not in emitted and (max_length is None or len(plan) <= max_length):
                emitted.add(sig)
                heapq.heappush(buffered, (len(plan), next(counter), plan))
            # Goal nodes are still expanded so longer plans stay reachable.
        if expansions >= config.node_budget:
            break
        expansions += 1
        metrics.nodes_expanded += 1
        for gs in gskills:
            if not applicable(node.state, gs.op):
                continue
            push(_Node(abstract_transition(node.state, gs.op), node, gs, node.depth + 1))
        # Gate emissions only after the popped node's children joined the
        # frontier, so the bound covers every possible future plan.
        yield from ready(flush=False)
        if n_yielded >= config.n_abstract:
            return
    # Search ended: everything left in the buffer is safe to emit in order.
    yield from ready(flush=True)


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


def refine(
    plan: AbstractPlan,
    task: Task,
    f: Callable[[State, Action], State],
    preds: Sequence[Predicate],
    config: PlannerConfig,
    seed_label: object = 0,
    plan_index: int = 0,
    metrics: PlanMetrics | None = None,
    deadline: float | None = None,
) -> list[Action] | None:
    """Depth-first backtracking refinement of one abstract plan.

    At step i a subgoal is sampled and the policy rolled out; on failure the
    step is resampled up to ``n_samples`` times, then the search backtracks.
    Returns the concatenated action sequence only if it replays through f to
    a goal-satisfying state within the task horizon.
    """
    metrics = metrics if metrics is not None else PlanMetrics()
    n = len(plan.steps)
    probe = ContactProbe(preds, task.objects)
    states: list[State] = [task.init]
    chunks: list[list[Action]] = []
    attempts = [0] * n
    i = 0
    while True:
        if deadline is not None and time.monotonic() > deadline:
            return None
        if i == n:
            actions = [u for chunk in chunks for u in chunk]
            if _verify(task, f, preds, actions):
                return actions
            return None
        gs = plan.steps[i]
        max_attempts = 1 if gs.skill.mode == "no_subgoal" else config.n_samples
        if attempts[i] >= max_attempts:
            attempts[i] = 0
            i -= 1
            if i < 0:
                return None
            states.pop()
            chunks.pop()
            continue
        attempts[i] += 1
        x = states[-1]
        subgoal: State | Action | None = None
        if gs.skill.mode != "no_subgoal":
            rng = rng_from("refine", seed_label, plan_index, i, attempts[i])
            subgoal = gs.skill.sample(gs.objects, x, rng)
            metrics.samples_drawn += 1
        used = sum(len(c) for c in chunks)
        actions, rollout, outcome = execute_policy(
            gs.skill, gs.objects, x, subgoal, f, plan.states[i + 1], preds, probe=probe
        )
        if outcome == "success" and used + len(actions) <= task.horizon:
            states.append(rollout[-1])
            chunks.append(actions)
            i += 1


def _verify(
    task: Task,
    f: Callable[[State, Action], State],
    preds: Sequence[Predicate],
    actions: Sequence[Action],
) -> bool:
    if len(actions) > task.horizon:
        return False
    x = task.init
    for u in actions:
        x = f(x, u)
    return goal_holds(task.goal, abstract(x, preds))


# ---------------------------------------------------------------------------
# Bilevel planning
# ---------------------------------------------------------------------------


def plan(
    task: Task,
    skills: Sequence[Skill],
    f: Callable[[State, Action], State],
    preds: Sequence[Predicate],
    config: PlannerConfig,
    seed_label: object = 0,
) -> tuple[list[Action] | None, PlanMetrics]:
    """Algorithm: stream abstract plans, refine each, return the first hit."""
    metrics = PlanMetrics()
    start = time.monotonic()
    deadline = start + config.timeout_s
    gskills = ground_skills(skills, task.objects)
    s0 = abstract(task.init, preds)
    stream = topk_abstract_plans(
        s0,
        task.goal,
        gskills,
        config,
        max_length=task.horizon + 1,
        deadline=deadline,
        metrics=metrics,
    )
    result: list[Action] | None = None
    for plan_index, aplan in enumerate(stream):
        metrics.plans_tried += 1
        result = refine(
            aplan,
            task,
            f,
            preds,
            config,
            seed_label=seed_label,
            plan_index=plan_index,
            metrics=metrics,
            deadline=deadline,
        )
        if result is not None:
            metrics.solved = True
            metrics.solution_length = len(result)
            break
        if time.monotonic() > deadline:
            break
    metrics.wall_time_s = time.monotonic() - start
    return result, metrics
