"""Stick Button dynamics: pressing, grasping, collisions, task profiles."""

import numpy as np
import pytest

from skillplan.core import Action, State, abstract, obj
from skillplan.envs import get_env
from skillplan.envs import stick_button as sb
from skillplan.envs.base import ScriptedPolicyFailure


@pytest.fixture(scope="module")
def env():
    return get_env("stick_button")


def _state(robot_xy, stick_xys, holder_xy, buttons):
    robot = obj("robot", sb.ROBOT_TYPE)
    stick = obj("stick", sb.STICK_TYPE)
    holder = obj("holder", sb.HOLDER_TYPE)
    data = {
        robot: np.array(robot_xy),
        stick: np.array(stick_xys),
        holder: np.array(holder_xy),
    }
    objs = [robot, stick, holder]
    for i, b in enumerate(buttons):
        bo = obj(f"button{i}", sb.BUTTON_TYPE)
        data[bo] = np.array(b)
        objs.append(bo)
    return State(data), objs


def test_press_with_zforce_above_threshold(env):
    x, objs = _state([2.0, 2.0], [6.0, 1.0, 0.0], [7.0, 1.0], [[2.2, 2.1, 0.0]])
    nxt = env.transition(x, Action(np.array([0.0, 0.0, 1.0])))
    assert nxt.get(objs[3], "pressed") == 1.0


def test_no_press_below_threshold_or_out_of_range(env):
    x, objs = _state([2.0, 2.0], [6.0, 1.0, 0.0], [7.0, 1.0], [[2.2, 2.1, 0.0]])
    low = env.transition(x, Action(np.array([0.0, 0.0, 0.4])))
    assert low.get(objs[3], "pressed") == 0.0
    far, objs2 = _state([2.0, 2.0], [6.0, 1.0, 0.0], [7.0, 1.0], [[3.0, 2.1, 0.0]])
    nxt = env.transition(far, Action(np.array([0.0, 0.0, 1.0])))
    assert nxt.get(objs2[3], "pressed") == 0.0


def test_collision_with_holder_blocks_press(env):
    # Robot sits over the holder; a nearby button cannot be pressed.
    x, objs = _state([7.0, 1.2], [6.0, 1.0, 0.0], [7.0, 1.0], [[7.1, 1.3, 0.0]])
    nxt = env.transition(x, Action(np.array([0.0, 0.0, 1.0])))
    assert nxt.get(objs[3], "pressed") == 0.0


def test_grasp_near_stick_and_carry(env):
    x, objs = _state([6.5, 1.2], [6.0, 1.0, 0.0], [9.0, 5.0], [[9.0, 9.0, 0.0]])
    robot, stick = objs[0], objs[1]
    grasped = env.transition(x, Action(np.array([0.0, 0.0, 1.0])))
    assert grasped.get(stick, "held") == 1.0
    # offset = rx - sx = 0.5; base sits that far below the hand
    assert grasped.get(stick, "x") == pytest.approx(6.5)
    assert grasped.get(stick, "y") == pytest.approx(1.2 - 0.5)
    moved = env.transition(grasped, Action(np.array([0.3, 0.2, 0.0])))
    assert moved.get(stick, "x") == pytest.approx(6.8)
    assert moved.get(stick, "y") == pytest.approx(0.9)
    tip = sb.stick_tip(moved, stick)
    assert tip == (pytest.approx(6.8), pytest.approx(0.9 + sb.STICK_LEN))


def test_press_with_stick_tip(env):
    # Grasped at offset 0.5: reach = stick length - 0.5 above the hand.
    x, objs = _state([4.0, 4.0], [3.5, 4.0 - 0.5, 1.0], [9.0, 1.0], [[4.1, 7.4, 0.0]])
    nxt = env.transition(x, Action(np.array([0.0, 0.0, 1.0])))
    assert nxt.get(objs[3], "pressed") == 1.0


def test_robot_confined_to_reachable_zone(env):
    x, _ = _state([5.0, 4.9], [1.0, 1.0, 0.0], [9.0, 1.0], [[9.0, 9.0, 0.0]])
    robot = obj("robot", sb.ROBOT_TYPE)
    nxt = env.transition(x, Action(np.array([0.0, 0.5, 0.0])))
    assert nxt.get(robot, "y") == sb.RZ_Y


def test_profiles_button_counts(env):
    for seed in range(30):
        train = env.sample_task(seed, "train")
        evalt = env.sample_task(seed, "eval")
        n_train = sum(o.otype is sb.BUTTON_TYPE for o in train.objects)
        n_eval = sum(o.otype is sb.BUTTON_TYPE for o in evalt.objects)
        assert n_train in (1, 2)
        assert n_eval in (3, 4)


def test_task_sampler_deterministic(env):
    a = env.sample_task(17, "train")
    b = env.sample_task(17, "train")
    assert a.objects == b.objects
    for o in a.objects:
        assert np.array_equal(a.init[o], b.init[o])


def test_scripted_policy_stick_usage(env):
    grasped_atoms_seen = {True: 0, False: 0}
    for seed in range(40):
        task = env.sample_task(seed, "eval")
        buttons = [o for o in task.objects if o.otype is sb.BUTTON_TYPE]
        needs_stick = any(task.init.get(b, "y") > sb.RZ_Y for b in buttons)
        demo = env.scripted_policy(task)
        used_stick = any(
            a.predicate is sb.GRASPED
            for x in demo.states
            for a in abstract(x, env.predicates).atoms
        )
        # The stick is grasped exactly when some button is out of reach.
        assert used_stick == needs_stick
        grasped_atoms_seen[needs_stick] += 1
    assert grasped_atoms_seen[True] > 0 and grasped_atoms_seen[False] >= 0


def test_contact_flags(env):
    flagged = {p.name for p in env.contact_predicates}
    assert flagged == {"Grasped", "Pressed"}


def test_feasibility_rate():
    env = get_env("stick_button")
    for profile in ("train", "eval"):
        solved = 0
        for seed in range(1000):
            task = env.sample_task(seed, profile)
            try:
                env.scripted_policy(task)
                solved += 1
            except ScriptedPolicyFailure:
                pass
        assert solved >= 990, f"{profile}: only {solved}/1000 scripted successes"
