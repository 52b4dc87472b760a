"""Tour of the two environments: tasks, dynamics, abstraction, demos.

Run:  python gallery/01_environments.py
"""

import numpy as np

from skillplan.core import Action, abstract
from skillplan.envs import get_env

# --- Cover: pick blocks and place them over target regions ----------------

cover = get_env("cover")
task = cover.sample_task(seed=7, profile="train")
print("cover objects:", ", ".join(o.name for o in task.objects))
print("goal:", sorted(str(a) for a in task.goal))

# The symbolic projection of the initial state: every true ground atom.
print("abstract(init):", abstract(task.init, cover.predicates))

# Dynamics are deterministic; a zero action changes nothing.
same = cover.transition(task.init, Action(np.zeros(3)))
assert all(np.array_equal(task.init[o], same[o]) for o in task.objects)

# The scripted demonstrator solves the task; replay re-verifies it exactly.
demo = cover.scripted_policy(task)
print(f"scripted demo: {len(demo.actions)} actions, replay OK =", cover.replay_valid(demo))
print("abstract(final):", abstract(demo.states[-1], cover.predicates))

# --- Stick Button: press buttons, fetch the stick for the far ones --------

sb = get_env("stick_button")
task = sb.sample_task(seed=5, profile="eval")
buttons = [o for o in task.objects if o.otype.name == "button"]
heights = {b.name: round(task.init.get(b, "y"), 2) for b in buttons}
print("\nstick button eval task, button heights:", heights)
print("(buttons with y > 5.0 are out of the robot's reachable zone)")

demo = sb.scripted_policy(task)
atoms_seen = set()
for x in demo.states:
    atoms_seen |= {str(a) for a in abstract(x, sb.predicates).atoms}
print(f"demo: {len(demo.actions)} actions; grasped the stick:",
      any(a.startswith("Grasped") for a in atoms_seen))
print("final:", abstract(demo.states[-1], sb.predicates))
