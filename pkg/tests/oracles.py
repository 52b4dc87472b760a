"""Independent reference implementations used only to check the real ones.

These deliberately take the dumbest correct route (exhaustive enumeration,
breadth-first search) and share no code with the implementations they
verify.
"""

from __future__ import annotations

import itertools
from collections import deque

from skillplan.core import GroundAtom


def brute_force_equivalent(a, b):
    """All injective typed maps between affected sets that match effects."""
    objs_a, objs_b = list(a.affected_objects), list(b.affected_objects)
    if len(objs_a) != len(objs_b):
        return []
    found = []
    for perm in itertools.permutations(objs_b):
        if any(x.otype is not y.otype for x, y in zip(objs_a, perm)):
            continue
        mapping = dict(zip(objs_a, perm))

        def apply(atoms):
            return frozenset(
                GroundAtom(at.predicate, tuple(mapping[o] for o in at.objects))
                for at in atoms
            )

        if apply(a.add_effects) == b.add_effects and apply(a.del_effects) == b.del_effects:
            found.append(mapping)
    return found


def bfs_plans(s0, goal, ground_ops, k, max_len):
    """First k goal-reaching ground-operator sequences, by breadth-first
    enumeration over sequences (no state merging)."""
    plans = []
    queue = deque([(s0, ())])
    while queue and len(plans) < k:
        s, seq = queue.popleft()
        if len(seq) > max_len:
            break
        if goal <= s.atoms:
            plans.append(seq)
            # keep enumerating: longer plans may pass through goal states
        if len(seq) == max_len:
            continue
        for op in ground_ops:
            if op.preconditions <= s.atoms:
                nxt_atoms = (s.atoms - op.delete_effects) | op.add_effects
                queue.append((type(s)(frozenset(nxt_atoms)), seq + (op,)))
    return plans[:k]
