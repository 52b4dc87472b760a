"""From raw trajectories to symbolic operators, step by step.

Demonstrations are cut wherever a contact-flagged atom flips, segments with
matching effects (up to object renaming) are pooled, affected objects are
lifted to typed variables, and one operator is induced per pool.

Run:  python gallery/02_segmentation_to_operators.py
"""

from skillplan.envs import get_env
from skillplan.operators import filter_low_data, learn_operator, render_operator
from skillplan.preprocess import equivalent, lift, partition, segment_corpus

env = get_env("stick_button")
demos = []
seed = 0
while len(demos) < 120:
    try:
        demos.append(env.scripted_policy(env.sample_task(seed, "train")))
    except Exception:
        pass
    seed += 1

# 1. Segmentation at contact switch points (Grasped / Pressed flips).
segments = segment_corpus(demos, env.predicates)
print(f"{len(demos)} demos -> {len(segments)} segments")
example = segments[0]
print("example segment effects:",
      sorted(str(a) for a in example.add_effects), "minus",
      sorted(str(a) for a in example.del_effects))

# 2. Two press segments on different buttons are equivalent up to renaming.
presses = [s for s in segments
           if any(a.predicate.name == "Pressed" for a in s.add_effects)]
mapping = equivalent(presses[0], presses[1])
if mapping is not None:
    print("object substitution between two press segments:",
          {o.name: m.name for o, m in mapping.items()})

# 3. Partition by effect equivalence, lift, and drop low-data pools (<1%).
datasets = partition(segments)
lifted = [lift(d) for d in datasets]
kept = filter_low_data(lifted, enabled=True)
print(f"{len(datasets)} skill datasets, {len(kept)} kept after the 1% filter")

# 4. One operator per dataset: arguments, preconditions, effects.
for lds in sorted(kept, key=lambda l: -len(l.segments)):
    op = learn_operator(lds, f"skill[{len(lds.segments)} segments]")
    print()
    print(render_operator(op).rstrip())
