"""Press buttons with the gripper or with a grasped stick.

The robot moves in a planar arena but can only enter the lower reachable
zone.  Buttons above the zone must be pressed with the stick, a rod that
extends straight up from wherever the robot grasped it.  A holder covers
part of the stick and blocks grasps near it.  Pressing and grasping happen
on a z-force action and fail on collision with the holder.
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

X_LO, X_HI = 0.0, 10.0
Y_LO, Y_HI = 0.0, 10.0
RZ_Y = 5.0  # robot may only move with y <= RZ_Y
MAX_STEP = 0.5
ZF_THRESHOLD = 0.5
PRESS_RADIUS = 0.4  # "above" radius for robot/stick-tip over a button
GRASP_TOL = 0.35  # max distance from the resting stick to grasp it
STICK_LEN = 4.0
ROBOT_RADIUS = 0.3
HOLDER_W = 1.6
HOLDER_H = 0.5
BUTTON_MIN_SEP = 1.2
BUTTON_Y_MAX = 8.8
UNREACH_BAND = (RZ_Y - 0.4, RZ_Y + 0.4)  # no buttons in this ambiguous band
PRESS_JITTER = 0.15  # demonstrator aim jitter, well inside PRESS_RADIUS
HORIZON = 1000

ROBOT_TYPE = object_type("robot", ("x", "y"))
BUTTON_TYPE = object_type("button", ("x", "y", "pressed"))
STICK_TYPE = object_type("stick", ("x", "y", "held"))
HOLDER_TYPE = object_type("holder", ("x", "y"))


def _held(x: State, s: Object) -> bool:
    return x.data[s][2] > 0.5


def stick_tip(x: State, s: Object) -> tuple[float, float]:
    """Tip of the stick: +y when carried (vertical), +x when resting."""
    vec = x.data[s]  # (x, y, held)
    if vec[2] > 0.5:
        return float(vec[0]), float(vec[1]) + STICK_LEN
    return float(vec[0]) + STICK_LEN, float(vec[1])


def _dist(ax: float, ay: float, bx: float, by: float) -> float:
    return ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5


def _robot_above(x: State, objects: tuple[Object, ...]) -> bool:
    g, b = objects
    gv, bv = x.data[g], x.data[b]
    return _dist(float(gv[0]), float(gv[1]), float(bv[0]), float(bv[1])) <= PRESS_RADIUS


def _stick_above(x: State, objects: tuple[Object, ...]) -> bool:
    s, b = objects
    tx, ty = stick_tip(x, s)
    bv = x.data[b]
    return _dist(tx, ty, float(bv[0]), float(bv[1])) <= PRESS_RADIUS


def _above_no_button(x: State, objects: tuple[Object, ...]) -> bool:
    (g,) = objects
    buttons = [o for o in x.data if o.otype is BUTTON_TYPE]
    sticks = [o for o in x.data if o.otype is STICK_TYPE]
    for b in buttons:
        if _robot_above(x, (g, b)):
            return False
        for s in sticks:
            if _stick_above(x, (s, b)):
                return False
    return True


def _hand_empty(x: State, objects: tuple[Object, ...]) -> bool:
    return not any(_held(x, s) for s in x.data if s.otype is STICK_TYPE)


PRESSED = predicate(
    "Pressed", (BUTTON_TYPE,), lambda x, o: x.data[o[0]][2] > 0.5, is_contact=True
)
GRASPED = predicate(
    "Grasped",
    (ROBOT_TYPE, STICK_TYPE),
    lambda x, o: _held(x, o[1]),
    is_contact=True,
)
HAND_EMPTY = predicate("HandEmpty", (ROBOT_TYPE,), _hand_empty)
ROBOT_ABOVE_BUTTON = predicate(
    "RobotAboveButton", (ROBOT_TYPE, BUTTON_TYPE), _robot_above
)
STICK_ABOVE_BUTTON = predicate(
    "StickAboveButton", (STICK_TYPE, BUTTON_TYPE), _stick_above
)
ABOVE_NO_BUTTON = predicate("AboveNoButton", (ROBOT_TYPE,), _above_no_button)


def _holder_collision(hx: float, hy: float, rx: float, ry: float) -> bool:
    return (
        abs(rx - hx) <= HOLDER_W / 2 + ROBOT_RADIUS
        and abs(ry - hy) <= HOLDER_H / 2 + ROBOT_RADIUS
    )


class StickButtonEnv(Environment):
    name = "stick_button"
    action_dim = 3

    @property
    def types(self):
        return (ROBOT_TYPE, BUTTON_TYPE, STICK_TYPE, HOLDER_TYPE)

    @property
    def predicates(self):
        return (
            PRESSED,
            GRASPED,
            HAND_EMPTY,
            ROBOT_ABOVE_BUTTON,
            STICK_ABOVE_BUTTON,
            ABOVE_NO_BUTTON,
        )

    # -- dynamics ----------------------------------------------------------

    def transition(self, x: State, u: Action) -> State:
        self.check_action(u)
        clamp = lambda v, lo, hi: lo if v < lo else (hi if v > hi else v)
        dx = clamp(float(u.values[0]), -MAX_STEP, MAX_STEP)
        dy = clamp(float(u.values[1]), -MAX_STEP, MAX_STEP)
        zf = float(u.values[2])

        robot = next(o for o in x.data if o.otype is ROBOT_TYPE)
        stick = next(o for o in x.data if o.otype is STICK_TYPE)
        holder = next(o for o in x.data if o.otype is HOLDER_TYPE)
        buttons = sorted(o for o in x.data if o.otype is BUTTON_TYPE)

        rvec = x.data[robot]
        rx = clamp(float(rvec[0]) + dx, X_LO, X_HI)
        ry = clamp(float(rvec[1]) + dy, Y_LO, RZ_Y)

        changes: dict[Object, np.ndarray] = {robot: np.array([rx, ry])}
        svec = x.data[stick]
        held = svec[2] > 0.5
        if held:
            grasp_off = float(rvec[1]) - float(svec[1])
            changes[stick] = np.array([rx, ry - grasp_off, 1.0])

        if zf > ZF_THRESHOLD:
            hvec = x.data[holder]
            if not _holder_collision(float(hvec[0]), float(hvec[1]), rx, ry):
                after_move = x.updated(changes)
                grabbed = False
                if not held:
                    sx, sy = float(svec[0]), float(svec[1])
                    on_span = sx - GRASP_TOL <= rx <= sx + STICK_LEN + GRASP_TOL
                    if on_span and abs(ry - sy) <= GRASP_TOL:
                        off = float(np.clip(rx - sx, 0.0, STICK_LEN))
                        changes[stick] = np.array([rx, ry - off, 1.0])
                        grabbed = True
                if not grabbed:
                    best = None
                    for b in buttons:
                        bvec = x.data[b]
                        if bvec[2] > 0.5:
                            continue
                        bx, by = float(bvec[0]), float(bvec[1])
                        d = _dist(rx, ry, bx, by)
                        if held:
                            tx, ty = stick_tip(after_move, stick)
                            d = min(d, _dist(tx, ty, bx, by))
                        if d <= PRESS_RADIUS and (best is None or d < best[0]):
                            best = (d, b)
                    if best is not None:
                        b = best[1]
                        vec = x[b].copy()
                        vec[2] = 1.0
                        changes[b] = vec

        return x.updated(changes)

    # -- tasks -------------------------------------------------------------

    def sample_task(self, seed: int, profile: str) -> Task:
        if profile not in ("train", "eval"):
            raise ValueError(f"unknown profile {profile!r}")
        rng = rng_from("stick-button-task", seed, profile)
        n_buttons = int(rng.integers(1, 3) if profile == "train" else rng.integers(3, 5))
        for _ in range(1000):
            task = self._try_sample(rng, n_buttons)
            if task is not None:
                return task
        raise RuntimeError("could not sample a feasible stick button task")

    def _try_sample(self, rng: np.random.Generator, n_buttons: int) -> Task | None:
        sx = float(rng.uniform(0.5, X_HI - STICK_LEN - 0.5))
        sy = float(rng.uniform(0.8, RZ_Y - 0.8))
        hx = float(rng.uniform(sx + HOLDER_W / 2, sx + STICK_LEN - HOLDER_W / 2))
        hy = sy

        rx = float(rng.uniform(0.5, X_HI - 0.5))
        ry = float(rng.uniform(0.5, RZ_Y - 0.5))
        if _holder_collision(hx, hy, rx, ry):
            return None

        positions: list[tuple[float, float]] = []
        rest_tip = (sx + STICK_LEN, sy)
        for _ in range(n_buttons):
            for _ in range(100):
                bx = float(rng.uniform(0.6, X_HI - 0.6))
                by = float(rng.uniform(0.6, BUTTON_Y_MAX))
                if UNREACH_BAND[0] < by < UNREACH_BAND[1]:
                    continue
                if _dist(bx, by, rx, ry) <= PRESS_RADIUS * 2:
                    continue
                if _dist(bx, by, *rest_tip) <= PRESS_RADIUS * 2.5:
                    continue
                # Pressing near the resting stick would grasp it instead.
                seg_dx = min(max(bx, sx), sx + STICK_LEN)
                if _dist(bx, by, seg_dx, sy) <= GRASP_TOL + PRESS_JITTER + 0.15:
                    continue
                # Keep a pressing robot (with aim jitter) clear of the holder.
                if (
                    abs(bx - hx) <= HOLDER_W / 2 + ROBOT_RADIUS + PRESS_JITTER + 0.05
                    and abs(by - hy) <= HOLDER_H / 2 + ROBOT_RADIUS + PRESS_JITTER + 0.05
                ):
                    continue
                if any(_dist(bx, by, px, py) < BUTTON_MIN_SEP for px, py in positions):
                    continue
                positions.append((bx, by))
                break
            else:
                return None

        unreachable = [(bx, by) for bx, by in positions if by > RZ_Y]
        if unreachable and not _grasp_choices(sx, sy, hx, hy, unreachable, PRESS_JITTER):
            return None

        robot = obj("robot", ROBOT_TYPE)
        stick = obj("stick", STICK_TYPE)
        holder = obj("holder", HOLDER_TYPE)
        buttons = [obj(f"button{i}", BUTTON_TYPE) for i in range(n_buttons)]
        data = {
            robot: np.array([rx, ry]),
            stick: np.array([sx, sy, 0.0]),
            holder: np.array([hx, hy]),
        }
        for b, (bx, by) in zip(buttons, positions):
            data[b] = np.array([bx, by, 0.0])
        init = State(data)
        goal = frozenset(GroundAtom(PRESSED, (b,)) for b in buttons)
        objects = tuple([robot, stick, holder] + buttons)
        return Task(objects, init, goal, HORIZON)

    # -- demonstrator --------------------------------------------------------

    def scripted_policy(self, task: Task) -> Demonstration:
        rng = rng_from("stick-button-script", _task_fingerprint(task))
        robot = next(o for o in task.objects if o.otype is ROBOT_TYPE)
        stick = next(o for o in task.objects if o.otype is STICK_TYPE)
        holder = next(o for o in task.objects if o.otype is HOLDER_TYPE)
        buttons = sorted(o for o in task.objects if o.otype is BUTTON_TYPE)

        x = task.init
        actions: list[Action] = []
        states: list[State] = [x]

        def emit(u: np.ndarray) -> None:
            nonlocal x
            act = Action(u)
            x = self.transition(x, act)
            actions.append(act)
            states.append(x)

        def move_to(tx: float, ty: float) -> None:
            for _ in range(2000):
                dx, dy = tx - x.get(robot, "x"), ty - x.get(robot, "y")
                if abs(dx) < 1e-12 and abs(dy) < 1e-12:
                    return
                sx_, sy_ = clip_step(dx, dy, MAX_STEP)
                emit(np.array([sx_, sy_, 0.0]))
            raise ScriptedPolicyFailure("movement did not converge")

        reachable = [b for b in buttons if x.get(b, "y") <= RZ_Y]
        unreachable = [b for b in buttons if x.get(b, "y") > RZ_Y]

        # Press reachable buttons with the gripper, nearest first.
        todo = list(reachable)
        while todo:
            bx_, by_ = x.get(robot, "x"), x.get(robot, "y")
            b = min(todo, key=lambda b: (_dist(bx_, by_, x.get(b, "x"), x.get(b, "y")), b.name))
            todo.remove(b)
            jx, jy = rng.uniform(-PRESS_JITTER, PRESS_JITTER, size=2)
            ty = float(np.clip(x.get(b, "y") + jy, Y_LO, RZ_Y))
            if _dist(x.get(b, "x") + jx, ty, x.get(b, "x"), x.get(b, "y")) > PRESS_RADIUS * 0.8:
                jx, jy, ty = 0.0, 0.0, x.get(b, "y")
            move_to(x.get(b, "x") + jx, ty)
            emit(np.array([0.0, 0.0, 1.0]))
            if x.get(b, "pressed") < 0.5:
                raise ScriptedPolicyFailure(f"press failed on {b.name}")

        if unreachable:
            hx, hy = x.get(holder, "x"), x.get(holder, "y")
            spots = [(x.get(b, "x"), x.get(b, "y")) for b in unreachable]
            choices = _grasp_choices(
                x.get(stick, "x"), x.get(stick, "y"), hx, hy, spots, PRESS_JITTER
            )
            if not choices:
                raise ScriptedPolicyFailure("no feasible stick grasp")
            lo, hi = choices[rng.integers(len(choices))]
            off = float(rng.uniform(lo, hi))
            move_to(x.get(stick, "x") + off, x.get(stick, "y"))
            emit(np.array([0.0, 0.0, 1.0]))
            if not _held(x, stick):
                raise ScriptedPolicyFailure("stick grasp failed")

            todo = list(unreachable)
            while todo:
                bx_, by_ = x.get(robot, "x"), x.get(robot, "y")
                b = min(todo, key=lambda b: (_dist(bx_, by_, x.get(b, "x"), x.get(b, "y")), b.name))
                todo.remove(b)
                reach = STICK_LEN - (x.get(robot, "y") - x.get(stick, "y"))
                jx = float(rng.uniform(-PRESS_JITTER, PRESS_JITTER))
                jy = float(rng.uniform(-PRESS_JITTER, PRESS_JITTER))
                ty = float(np.clip(x.get(b, "y") - reach + jy, Y_LO, RZ_Y))
                move_to(x.get(b, "x") + jx, ty)
                emit(np.array([0.0, 0.0, 1.0]))
                if x.get(b, "pressed") < 0.5:
                    raise ScriptedPolicyFailure(f"stick press failed on {b.name}")

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


def _grasp_choices(
    sx: float,
    sy: float,
    hx: float,
    hy: float,
    button_spots: list[tuple[float, float]],
    margin: float,
) -> list[tuple[float, float]]:
    """Intervals of grasp offsets that permit pressing every listed button.

    A grasp at offset ``o`` leaves reach ``STICK_LEN - o`` above the hand, so
    a button at height ``by`` requires ``by - (STICK_LEN - o) <= RZ_Y``.  The
    grasp point itself must not collide with the holder, and neither may the
    robot while pressing.
    """
    lo, hi = 0.0, STICK_LEN
    for bx, by in button_spots:
        hi = min(hi, RZ_Y + STICK_LEN - by - margin)
    if hi <= lo:
        return []
    intervals = [(lo, hi)]
    blocked: list[tuple[float, float]] = []
    # Grasping at sx + o fails when the robot overlaps the holder.
    blocked.append(
        (hx - sx - HOLDER_W / 2 - ROBOT_RADIUS, hx - sx + HOLDER_W / 2 + ROBOT_RADIUS)
    )
    # Pressing button (bx, by) puts the robot at (bx, by - reach).
    for bx, by in button_spots:
        if abs(bx - hx) <= HOLDER_W / 2 + ROBOT_RADIUS + margin:
            center = sy + STICK_LEN - by  # o making the press height equal hy
            half = HOLDER_H / 2 + ROBOT_RADIUS + margin
            blocked.append((center - half, center + half))
    for blo, bhi in blocked:
        nxt = []
        for ilo, ihi in intervals:
            if bhi <= ilo or blo >= ihi:
                nxt.append((ilo, ihi))
                continue
            if ilo < blo:
                nxt.append((ilo, blo))
            if bhi < ihi:
                nxt.append((bhi, ihi))
        intervals = nxt
    return [(lo, hi) for lo, hi in intervals if hi - lo >= 0.2]
