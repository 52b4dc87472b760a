"""Pick-and-place on a line: cover target regions with blocks.

A gripper moves in two dimensions above a unit line.  Grasps may only be
initiated and released while the hand is inside an allowed region, so the
choice of grasp constrains where a block can later be placed.  Tasks have
two blocks and two targets; the goal pairs each block with its target.
"""

from __future__ import annotations

import numpy as np

from skillplan.core import (
    Action,
    Demonstration,
    GroundAtom,
    Object,
    State,
    Task,
    obj,
    object_type,
    predicate,
)
from skillplan.envs.base import Environment, ScriptedPolicyFailure, clip_step
from skillplan.util import rng_from, stable_seed

# Geometry.  The line spans [0, 1]; heights are small.  All constants are
# declared here, not inferred from anything.
X_LO, X_HI = 0.0, 1.0
Y_LO, Y_HI = 0.0, 0.3
MAX_STEP = 0.05  # componentwise clip on (dx, dy)
CONTACT_Y = 0.04  # grasps/releases only at or below this height
TRAVEL_Y = 0.2
GRIP_MIN, GRIP_MAX = 0.0, 1.0
GRIP_THRESHOLD = 0.5
GRASP_FREE = -1.0  # block grasp feature when not held
BLOCK_WIDTH = (0.07, 0.10)
BLOCK_HEIGHT = (0.03, 0.06)
TARGET_WIDTH = (0.030, 0.045)
REGION_WIDTH = (0.28, 0.48)
LANDMARK_SEP = 0.18  # min spacing between block/target centers at sampling
HORIZON = 1000

BLOCK_TYPE = object_type("block", ("height", "width", "x", "y", "grasp"))
TARGET_TYPE = object_type("target", ("width", "x"))
GRIPPER_TYPE = object_type("gripper", ("x", "y", "grip", "holding"))
REGION_TYPE = object_type("allowed_region", ("lower_x", "upper_x"))


def _block_free(x: State, b: Object) -> bool:
    return x.get(b, "grasp") < -0.5


def _covers(x: State, objects: tuple[Object, ...]) -> bool:
    b, t = objects
    if not _block_free(x, b) or x.get(b, "y") > 1e-9:
        return False
    bx, bw = x.get(b, "x"), x.get(b, "width")
    tx, tw = x.get(t, "x"), x.get(t, "width")
    return bx - bw / 2 <= tx - tw / 2 and bx + bw / 2 >= tx + tw / 2


def _hand_empty(x: State, objects: tuple[Object, ...]) -> bool:
    (g,) = objects
    return x.get(g, "holding") < 0.5


def _holding(x: State, objects: tuple[Object, ...]) -> bool:
    g, b = objects
    return x.get(g, "holding") > 0.5 and not _block_free(x, b)


COVERS = predicate("Covers", (BLOCK_TYPE, TARGET_TYPE), _covers, is_contact=True)
HAND_EMPTY = predicate("HandEmpty", (GRIPPER_TYPE,), _hand_empty, is_contact=True)
HOLDING = predicate("Holding", (GRIPPER_TYPE, BLOCK_TYPE), _holding, is_contact=True)
IS_BLOCK = predicate("IsBlock", (BLOCK_TYPE,), lambda x, o: True)
IS_TARGET = predicate("IsTarget", (TARGET_TYPE,), lambda x, o: True)


class CoverEnv(Environment):
    name = "cover"
    action_dim = 3

    @property
    def types(self):
        return (BLOCK_TYPE, TARGET_TYPE, GRIPPER_TYPE, REGION_TYPE)

    @property
    def predicates(self):
        return (COVERS, HAND_EMPTY, HOLDING, IS_BLOCK, IS_TARGET)

    # -- dynamics ----------------------------------------------------------

    def transition(self, x: State, u: Action) -> State:
        self.check_action(u)
        clamp = lambda v, lo, hi: lo if v < lo else (hi if v > hi else v)
        dx = clamp(float(u.values[0]), -MAX_STEP, MAX_STEP)
        dy = clamp(float(u.values[1]), -MAX_STEP, MAX_STEP)
        dgrip = clamp(float(u.values[2]), -1.0, 1.0)

        gripper = next(o for o in x.data if o.otype is GRIPPER_TYPE)
        blocks = sorted(o for o in x.data if o.otype is BLOCK_TYPE)
        regions = [o for o in x.data if o.otype is REGION_TYPE]

        gvec = x.data[gripper]
        gx, gy, grip, holding = (float(v) for v in gvec)
        nx = clamp(gx + dx, X_LO, X_HI)
        ny = clamp(gy + dy, Y_LO, Y_HI)
        ngrip = clamp(grip + dgrip, GRIP_MIN, GRIP_MAX)

        in_region = any(
            x.get(r, "lower_x") <= nx <= x.get(r, "upper_x") for r in regions
        )
        # Grasping is level-triggered: a closed grip at contact height inside
        # an allowed region grasps; an open grip there releases.  Held blocks
        # stay attached anywhere else regardless of grip level.
        closed = ngrip >= GRIP_THRESHOLD
        changes: dict[Object, np.ndarray] = {}
        held = next((b for b in blocks if not _block_free(x, b)), None)

        if held is None:
            if closed and ny <= CONTACT_Y and in_region:
                candidates = [
                    b
                    for b in blocks
                    if abs(nx - x.get(b, "x")) <= x.get(b, "width") / 2
                    and x.get(b, "y") <= CONTACT_Y
                ]
                if candidates:
                    b = min(candidates, key=lambda b: (abs(nx - x.get(b, "x")), b.name))
                    vec = x[b].copy()
                    vec[3] = ny
                    vec[4] = nx - x.get(b, "x")
                    changes[b] = vec
                    holding = 1.0
        else:
            grasp = x.get(held, "grasp")
            vec = x[held].copy()
            if not closed and ny <= CONTACT_Y and in_region:
                vec[2] = nx - grasp
                vec[3] = 0.0
                vec[4] = GRASP_FREE
                holding = 0.0
            else:
                vec[2] = nx - grasp
                vec[3] = ny
            changes[held] = vec

        changes[gripper] = np.array([nx, ny, ngrip, holding])
        return x.updated(changes)

    # -- tasks -------------------------------------------------------------

    def sample_task(self, seed: int, profile: str) -> Task:
        if profile not in ("train", "eval"):
            raise ValueError(f"unknown profile {profile!r}")
        rng = rng_from("cover-task", seed, profile)
        for _ in range(1000):
            task = self._try_sample(rng)
            if task is not None:
                return task
        raise RuntimeError("could not sample a feasible cover task")

    def _try_sample(self, rng: np.random.Generator) -> Task | None:
        widths = rng.uniform(*BLOCK_WIDTH, size=2)
        heights = rng.uniform(*BLOCK_HEIGHT, size=2)
        twidths = rng.uniform(*TARGET_WIDTH, size=2)

        centers: list[float] = []  # b0 b1 t0 t1
        for _ in range(4):
            for _ in range(100):
                c = float(rng.uniform(0.08, 0.92))
                if all(abs(c - p) >= LANDMARK_SEP for p in centers):
                    centers.append(c)
                    break
            else:
                return None

        rw = rng.uniform(*REGION_WIDTH, size=2)
        rlo = rng.uniform(0.0, 1.0 - rw)
        regions = [(float(rlo[i]), float(rlo[i] + rw[i])) for i in range(2)]

        gx = float(rng.uniform(0.05, 0.95))
        gy = float(rng.uniform(0.12, 0.28))

        blocks = [obj(f"block{i}", BLOCK_TYPE) for i in range(2)]
        targets = [obj(f"target{i}", TARGET_TYPE) for i in range(2)]
        gripper = obj("robby", GRIPPER_TYPE)
        region_objs = [obj(f"region{i}", REGION_TYPE) for i in range(2)]

        data = {
            gripper: np.array([gx, gy, 0.0, 0.0]),
        }
        for i, b in enumerate(blocks):
            data[b] = np.array(
                [heights[i], widths[i], centers[i], 0.0, GRASP_FREE]
            )
        for i, t in enumerate(targets):
            data[t] = np.array([twidths[i], centers[2 + i]])
        for i, r in enumerate(region_objs):
            data[r] = np.array(list(regions[i]))
        init = State(data)

        # No block may cover a target initially, and each goal pair must be
        # achievable under the allowed regions.
        for b in blocks:
            for t in targets:
                if _covers(init, (b, t)):
                    return None
        # Feasible grasp/place combos must not be a sliver: the samplers
        # cannot see the allowed regions, so tasks whose valid choices are
        # vanishingly rare are all but unsolvable for any region-blind
        # policy (and were never seen in training either).
        for i in range(2):
            choices = _feasible_moves(init, blocks[i], targets[i], region_objs)
            if len(choices) < 40 or len({g for g, _ in choices}) < 6:
                return None

        goal = frozenset(
            GroundAtom(COVERS, (blocks[i], targets[i])) for i in range(2)
        )
        objects = tuple(blocks + targets + [gripper] + region_objs)
        return Task(objects, init, goal, HORIZON)

    # -- demonstrator --------------------------------------------------------

    def scripted_policy(self, task: Task) -> Demonstration:
        rng = rng_from("cover-script", _task_fingerprint(task))
        gripper = next(o for o in task.objects if o.otype is GRIPPER_TYPE)
        blocks = sorted(o for o in task.objects if o.otype is BLOCK_TYPE)
        regions = [o for o in task.objects if o.otype is REGION_TYPE]
        pairs = _goal_pairs(task)

        x = task.init
        actions: list[Action] = []
        states: list[State] = [x]

        def emit(u: np.ndarray) -> None:
            nonlocal x
            act = Action(u)
            x = self.transition(x, act)
            actions.append(act)
            states.append(x)

        def move_to(tx: float, ty: float, hold: float) -> None:
            # The grip channel integrates, so demonstrations saturate it
            # (-1 while open, +1 while carrying); the clamp absorbs noise
            # that a cloned policy would otherwise accumulate into a
            # spurious grasp or release edge.
            for _ in range(2000):
                dx, dy = tx - x.get(gripper, "x"), ty - x.get(gripper, "y")
                if abs(dx) < 1e-12 and abs(dy) < 1e-12:
                    return
                sx, sy = clip_step(dx, dy, MAX_STEP)
                emit(np.array([sx, sy, hold]))
            raise ScriptedPolicyFailure("movement did not converge")

        for i, (b, t) in enumerate(pairs):
            choices = _feasible_moves(x, b, t, regions)
            if not choices:
                raise ScriptedPolicyFailure(f"no feasible grasp/place for {b.name}")
            grasp, place = choices[rng.integers(len(choices))]
            bx = x.get(b, "x")
            move_to(bx + grasp, TRAVEL_Y, hold=-1.0)
            move_to(bx + grasp, CONTACT_Y / 2, hold=-1.0)
            emit(np.array([0.0, 0.0, 1.0]))
            if not _holding(x, (gripper, b)):
                raise ScriptedPolicyFailure(f"failed to grasp {b.name}")
            move_to(bx + grasp, TRAVEL_Y, hold=1.0)
            move_to(place + grasp, TRAVEL_Y, hold=1.0)
            move_to(place + grasp, CONTACT_Y / 2, hold=1.0)
            emit(np.array([0.0, 0.0, -1.0]))
            if not _covers(x, (b, t)):
                raise ScriptedPolicyFailure(f"placement missed {t.name}")
            if i + 1 < len(pairs):
                move_to(place + grasp, TRAVEL_Y, hold=-1.0)

        final = self.abstract(x)
        if not all(a in final.atoms for a in task.goal):
            raise ScriptedPolicyFailure("goal not achieved")
        if len(actions) > task.horizon:
            raise ScriptedPolicyFailure("demonstration exceeds horizon")
        return Demonstration(task, tuple(actions), tuple(states))


def _task_fingerprint(task: Task) -> int:
    parts = []
    for o in task.objects:
        parts.append((o.name, tuple(float(v) for v in task.init[o])))
    return stable_seed(tuple(parts))


def _goal_pairs(task: Task) -> list[tuple[Object, Object]]:
    pairs = []
    for atom in sorted(task.goal, key=lambda a: a.sort_key()):
        if atom.predicate is COVERS:
            pairs.append((atom.objects[0], atom.objects[1]))
    return pairs


def _feasible_moves(
    x: State, b: Object, t: Object, regions: list[Object]
) -> list[tuple[float, float]]:
    """Grid of (grasp offset, placement center) choices that work.

    A grasp at offset g succeeds iff block_x + g lies in an allowed region;
    the later release at placement p requires p + g in a region and p close
    enough to the target center that the block covers it.
    """
    spans = [(x.get(r, "lower_x"), x.get(r, "upper_x")) for r in regions]

    def allowed(px: float) -> bool:
        return any(lo <= px <= hi for lo, hi in spans)

    bx, bw = x.get(b, "x"), x.get(b, "width")
    tx, tw = x.get(t, "x"), x.get(t, "width")
    slack = (bw - tw) / 2
    out = []
    for grasp in np.linspace(-bw / 2 + 0.005, bw / 2 - 0.005, 15):
        if not allowed(bx + grasp):
            continue
        for place in np.linspace(tx - slack + 1e-4, tx + slack - 1e-4, 15):
            if allowed(place + grasp) and X_LO <= place + grasp <= X_HI:
                out.append((float(grasp), float(place)))
    return out
