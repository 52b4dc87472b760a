"""Subgoal-conditioned policies and subgoal samplers for learned skills.

Each skill sees the world through its scope: the concatenated feature
vectors of the objects bound to its arguments.  Policies consume the scoped
state plus a relative subgoal (scoped target minus scoped current state,
with statically constant dimensions removed) and output an action.  The
sampler is a Gaussian generator over relative subgoals, rejection-filtered
by a binary classifier for up to a fixed number of tries.

Three modes exist: ``subgoal`` (the full method), ``no_subgoal`` (plain
behavioral cloning per skill, no sampler), and ``pass_through`` (single-step
skills whose "subgoal" is a raw action; the policy is the identity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from skillplan.core import (
    AbstractState,
    Action,
    GroundAtom,
    Object,
    Predicate,
    State,
    _type_correct_tuples,
    abstract,
)
from skillplan.nn import Mlp, NormStats, _elu_plus_one, sample_gaussian, train


def _gaussian_var(raw: np.ndarray) -> np.ndarray:
    return _elu_plus_one(raw)
from skillplan.operators import Operator
from skillplan.preprocess import LiftedSkillDataset
from skillplan.util import rng_from, stable_seed

MODES = ("subgoal", "no_subgoal", "pass_through")
MARGINAL_MIX = 0.2  # fraction of proposal draws taken from the population marginal
STATIC_TOL = 1e-6
H_SKILL_FLOOR = 10
H_SKILL_FACTOR = 1.5


# ---------------------------------------------------------------------------
# Scoped vectors
# ---------------------------------------------------------------------------


def scoped_vector(x: State, objects: Sequence[Object]) -> np.ndarray:
    """Concatenate the feature vectors of the scope objects, in order."""
    if not objects:
        return np.zeros(0)  # empty-effect skills have an empty scope
    return np.concatenate([x[o] for o in objects])


def scoped_slices(objects: Sequence[Object]) -> list[tuple[int, int]]:
    out, pos = [], 0
    for o in objects:
        out.append((pos, pos + o.otype.dim))
        pos += o.otype.dim
    return out


def write_scoped(x: State, objects: Sequence[Object], vec: np.ndarray) -> State:
    """Inverse of scoped_vector: write slices back onto the scope objects."""
    changes = {}
    for o, (lo, hi) in zip(objects, scoped_slices(objects)):
        changes[o] = vec[lo:hi]
    return x.updated(changes)


def detect_static_dims(targets: np.ndarray) -> tuple[int, ...]:
    """Dimensions whose max-min over all training targets is below 1e-6."""
    if targets.shape[0] == 0:
        return ()
    spread = targets.max(axis=0) - targets.min(axis=0)
    return tuple(int(i) for i in np.nonzero(spread < STATIC_TOL)[0])


# ---------------------------------------------------------------------------
# Training rows
# ---------------------------------------------------------------------------


def skill_rows(lds: LiftedSkillDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step rows: scoped state, full relative subgoal, action.

    One row per demonstrated action: input state x_{i-1} scoped to the
    skill's arguments, the segment's final scoped state minus the current
    scoped state, and the demonstrated action u_i.
    """
    xs: list[np.ndarray] = []
    rels: list[np.ndarray] = []
    acts: list[np.ndarray] = []
    var_order = lds.variables
    for seg, omap in zip(lds.segments, lds.object_maps):
        by_var = {v: o for o, v in omap.items()}
        scope = [by_var[v] for v in var_order]
        final = scoped_vector(seg.states[-1], scope)
        for i, u in enumerate(seg.actions):
            cur = scoped_vector(seg.states[i], scope)
            xs.append(cur)
            rels.append(final - cur)
            acts.append(np.asarray(u.values))
    return np.array(xs), np.array(rels), np.array(acts)


def build_policy_dataset(
    lds: LiftedSkillDataset, mode: str = "subgoal"
) -> tuple[np.ndarray, np.ndarray]:
    """Supervised (input, action) pairs for behavioral cloning."""
    X_state, Y_rel, Y_act = skill_rows(lds)
    if mode == "no_subgoal":
        return X_state, Y_act
    if mode == "pass_through":
        raise ValueError("pass-through skills have no policy dataset")
    static = detect_static_dims(Y_rel)
    kept = [i for i in range(Y_rel.shape[1]) if i not in static]
    return np.concatenate([X_state, Y_rel[:, kept]], axis=1), Y_act


# ---------------------------------------------------------------------------
# Skill hyperparameters
# ---------------------------------------------------------------------------


@dataclass
class SkillTrainConfig:
    """App-default training schedule for one skill's networks."""

    policy_hidden: tuple[int, int] = (32, 32)
    policy_epochs: int = 10_000
    policy_lr: float = 1e-3
    generator_hidden: tuple[int, int] = (32, 32)
    generator_epochs: int = 50_000
    generator_lr: float = 1e-3
    classifier_hidden: tuple[int, int] = (32, 32)
    classifier_epochs: int = 10_000
    classifier_lr: float = 1e-3
    rejection_tries: int = 100
    noise_negative_scale: float = 5.0
    mode: str = "subgoal"


@dataclass
class SkillJob:
    """Array-only payload for training one skill's networks in a worker."""

    name: str
    seed: int
    config: SkillTrainConfig
    scope_dim: int
    action_dim: int
    X_state: np.ndarray
    target_full: np.ndarray  # relative subgoals, or raw actions in pass-through
    Y_act: np.ndarray
    static_dims: tuple[int, ...]
    static_values: np.ndarray
    neg_X: np.ndarray | None
    neg_target_full: np.ndarray | None


@dataclass
class SkillNets:
    """Trained networks plus normalization stats and loss curves."""

    name: str
    policy: Mlp | None = None
    policy_in: NormStats | None = None
    policy_out: NormStats | None = None
    generator: Mlp | None = None
    generator_in: NormStats | None = None
    classifier: Mlp | None = None
    classifier_in: NormStats | None = None
    curves: dict[str, list[float]] = field(default_factory=dict)


def compatible_scopes(a: LiftedSkillDataset, b: LiftedSkillDataset) -> bool:
    """Negative-example compatibility: identical argument type tuples."""
    return tuple(v.otype for v in a.variables) == tuple(v.otype for v in b.variables)


def prepare_skill_job(
    name: str,
    lds: LiftedSkillDataset,
    others: Sequence[LiftedSkillDataset],
    config: SkillTrainConfig,
    seed: int,
) -> SkillJob:
    X_state, Y_rel, Y_act = skill_rows(lds)
    target_full = Y_act if config.mode == "pass_through" else Y_rel
    static = detect_static_dims(target_full)
    static_values = (
        target_full[:, list(static)].mean(axis=0) if static else np.zeros(0)
    )
    neg_X = neg_T = None
    if config.mode == "subgoal" or config.mode == "pass_through":
        neg_rows_x, neg_rows_t = [], []
        for other in others:
            if other is lds or not compatible_scopes(lds, other):
                continue
            ox, orel, oact = skill_rows(other)
            neg_rows_x.append(ox)
            neg_rows_t.append(oact if config.mode == "pass_through" else orel)
        if neg_rows_x:
            neg_X = np.concatenate(neg_rows_x)
            neg_T = np.concatenate(neg_rows_t)
    return SkillJob(
        name=name,
        seed=seed,
        config=config,
        scope_dim=X_state.shape[1],
        action_dim=Y_act.shape[1],
        X_state=X_state,
        target_full=target_full,
        Y_act=Y_act,
        static_dims=static,
        static_values=static_values,
        neg_X=neg_X,
        neg_target_full=neg_T,
    )


def run_skill_job(job: SkillJob) -> SkillNets:
    """Train the networks for one skill.  Deterministic given the job."""
    cfg = job.config
    nets = SkillNets(job.name)
    kept = [i for i in range(job.target_full.shape[1]) if i not in job.static_dims]
    target = job.target_full[:, kept]

    if cfg.mode != "pass_through":
        if cfg.mode == "subgoal":
            X = np.concatenate([job.X_state, target], axis=1)
        else:
            X = job.X_state
        nets.policy_in = NormStats.fit(X)
        nets.policy_out = NormStats.fit(job.Y_act)
        sizes = (X.shape[1], *cfg.policy_hidden, job.action_dim)
        nets.policy = Mlp(sizes, "linear")
        nets.curves["policy"] = train(
            nets.policy,
            nets.policy_in.normalize(X),
            nets.policy_out.normalize(job.Y_act),
            "mse",
            cfg.policy_epochs,
            cfg.policy_lr,
            stable_seed(job.seed, job.name, "policy"),
        )

    if cfg.mode != "no_subgoal":
        d = len(kept)
        nets.generator_in = NormStats.fit(job.X_state)
        gsizes = (job.scope_dim, *cfg.generator_hidden, 2 * d)
        nets.generator = Mlp(gsizes, "gaussian")
        nets.curves["generator"] = train(
            nets.generator,
            nets.generator_in.normalize(job.X_state),
            target,
            "gaussian_nll",
            cfg.generator_epochs,
            cfg.generator_lr,
            stable_seed(job.seed, job.name, "generator"),
        )

        pos = np.concatenate([job.X_state, target], axis=1)
        if job.neg_X is not None and len(job.neg_X) > 0:
            neg = np.concatenate([job.neg_X, job.neg_target_full[:, kept]], axis=1)
            if len(neg) > len(pos):
                idx = rng_from(job.seed, job.name, "neg-subsample").permutation(len(neg))
                neg = neg[idx[: len(pos)]]
        else:
            # No scope-compatible sibling: corrupt the subgoal part instead.
            noise_rng = rng_from(job.seed, job.name, "neg-noise")
            std = np.maximum(target.std(axis=0) * cfg.noise_negative_scale, 1e-3)
            noisy = target + noise_rng.normal(size=target.shape) * std
            neg = np.concatenate([job.X_state, noisy], axis=1)
        Xc = np.concatenate([pos, neg])
        yc = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        nets.classifier_in = NormStats.fit(Xc)
        csizes = (Xc.shape[1], *cfg.classifier_hidden, 1)
        nets.classifier = Mlp(csizes, "logistic")
        nets.curves["classifier"] = train(
            nets.classifier,
            nets.classifier_in.normalize(Xc),
            yc,
            "bce",
            cfg.classifier_epochs,
            cfg.classifier_lr,
            stable_seed(job.seed, job.name, "classifier"),
        )
    return nets


# ---------------------------------------------------------------------------
# Assembled skills
# ---------------------------------------------------------------------------


@dataclass
class Skill:
    """Operator plus trained policy and sampler sharing one argument tuple."""

    name: str
    operator: Operator
    mode: str
    h_skill: int
    scope_dim: int
    action_dim: int
    static_dims: tuple[int, ...]
    static_values: np.ndarray
    dataset_size: int
    nets: SkillNets
    rejection_tries: int = 100
    _fast: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def variables(self):
        return self.operator.arguments

    def _kept(self, width: int) -> list[int]:
        return [i for i in range(width) if i not in self.static_dims]

    def _compiled(self, label: str):
        """Inference copy with normalization folded into the weights."""
        if label not in self._fast:
            nets = self.nets
            if label == "policy":
                self._fast[label] = nets.policy.fold_normalization(
                    nets.policy_in, nets.policy_out
                )
            elif label == "generator":
                self._fast[label] = nets.generator.fold_normalization(nets.generator_in)
            else:
                self._fast[label] = nets.classifier.fold_normalization(nets.classifier_in)
        return self._fast[label]

    # -- policy -------------------------------------------------------------

    def action(self, objects: Sequence[Object], x: State, subgoal: State | Action) -> Action:
        if self.mode == "pass_through":
            assert isinstance(subgoal, Action)
            return subgoal
        cur = scoped_vector(x, objects)
        if self.mode == "subgoal":
            assert isinstance(subgoal, State)
            rel = scoped_vector(subgoal, objects) - cur
            inp = np.concatenate([cur, rel[self._kept(len(rel))]])
        else:
            inp = cur
        return Action(self._compiled("policy").forward_1d(inp))

    def action_from_input(self, inp: np.ndarray) -> Action:
        """Policy action from a prebuilt input vector (rollout hot path)."""
        return Action(self._compiled("policy").forward_1d(inp))

    # -- sampler ------------------------------------------------------------

    def proposal_candidates(
        self, cur: np.ndarray, rng: np.random.Generator, k: int
    ) -> np.ndarray:
        """k proposal draws for the scoped state ``cur``.

        Mostly the generator's conditional Gaussian; a fixed fraction of
        draws instead use the skill's population marginal over training
        targets.  With one demonstration per task the conditional spread
        seen in training is zero, so long NLL training can collapse the
        variance head on parts of the input space; the marginal draws keep
        the proposal's support wide there while precision-critical skills
        still get conditionally tight candidates.  The marginal comes from
        the classifier's input statistics (its last dims are the targets).
        """
        raw = self._compiled("generator").forward_1d(cur)
        d = len(raw) // 2
        mean, var = raw[:d], _gaussian_var(raw[d:])
        cand = mean + np.sqrt(var) * rng.standard_normal((k, d))
        if self.nets.classifier_in is not None and MARGINAL_MIX > 0 and k > 1:
            marg_mean = self.nets.classifier_in.shift[-d:]
            marg_std = self.nets.classifier_in.scale[-d:]
            wide = rng.random(k) < MARGINAL_MIX
            wide[0] = False  # the first draw is always the conditional one
            n_wide = int(wide.sum())
            if n_wide:
                cand[wide] = marg_mean + marg_std * rng.standard_normal((n_wide, d))
        return cand

    def sample(
        self, objects: Sequence[Object], x: State, rng: np.random.Generator
    ) -> State | Action:
        """Rejection-sampled subgoal (or raw action in pass-through mode)."""
        if self.mode == "no_subgoal":
            raise ValueError("no-subgoal skills have no sampler")
        cur = scoped_vector(x, objects)
        if self.nets.classifier is None:
            raw = self._compiled("generator").forward_1d(cur)
            d = len(raw) // 2
            draw = sample_gaussian(raw[:d], _gaussian_var(raw[d:]), rng)
        else:
            # All candidate draws at once, scored by one batched classifier
            # pass; the rng is fresh per call, so batching is equivalent to
            # rejection-sampling one candidate at a time.  The logistic
            # head's 0.5 threshold is a zero threshold on the logits.
            k = self.rejection_tries
            cand = self.proposal_candidates(cur, rng, k)
            cls_in = np.concatenate([np.tile(cur, (k, 1)), cand], axis=1)
            net = self._compiled("classifier")
            h = cls_in
            last = len(net.weights) - 1
            for i, (W, b) in enumerate(zip(net.weights, net.biases)):
                h = h @ W + b
                if i < last:
                    np.maximum(h, 0.0, out=h)
            accepted = np.nonzero(h[:, 0] > 0.0)[0]
            draw = cand[accepted[0]] if len(accepted) else cand[-1]
        width = self.action_dim if self.mode == "pass_through" else self.scope_dim
        full = np.zeros(width)
        full[self._kept(width)] = draw
        for j, dim in enumerate(self.static_dims):
            full[dim] = self.static_values[j]
        if self.mode == "pass_through":
            return Action(full)
        # Static dims carry a zero delta, i.e. they are copied from x.
        target = cur.copy()
        keep = self._kept(width)
        target[keep] = cur[keep] + full[keep]
        return write_scoped(x, objects, target)


def h_skill_for(lds: LiftedSkillDataset) -> int:
    longest = max(len(seg.actions) for seg in lds.segments)
    return max(H_SKILL_FLOOR, int(np.ceil(H_SKILL_FACTOR * longest)))


def assemble_skill(
    name: str,
    lds: LiftedSkillDataset,
    operator: Operator,
    job: SkillJob,
    nets: SkillNets,
) -> Skill:
    return Skill(
        name=name,
        operator=operator,
        mode=job.config.mode,
        h_skill=h_skill_for(lds),
        scope_dim=job.scope_dim,
        action_dim=job.action_dim,
        static_dims=job.static_dims,
        static_values=job.static_values,
        dataset_size=len(lds.segments),
        nets=nets,
        rejection_tries=job.config.rejection_tries,
    )


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


class ContactProbe:
    """Prebuilt contact-atom candidates for fast per-step truth snapshots."""

    def __init__(self, preds: Sequence[Predicate], objects: Sequence[Object]):
        objs = sorted(objects)
        self.candidates: list[tuple[Predicate, tuple[Object, ...], GroundAtom]] = []
        for pred in sorted(p for p in preds if p.is_contact):
            for tup in _type_correct_tuples(pred, objs):
                self.candidates.append((pred, tup, GroundAtom(pred, tup)))

    def snapshot(self, x: State) -> frozenset[GroundAtom]:
        return frozenset(
            atom for pred, tup, atom in self.candidates if pred.classifier(x, tup)
        )


def execute_policy(
    skill: Skill,
    objects: Sequence[Object],
    x0: State,
    subgoal: State | Action,
    f: Callable[[State, Action], State],
    expected: AbstractState,
    preds: Sequence[Predicate],
    probe: ContactProbe | None = None,
) -> tuple[list[Action], list[State], str]:
    """Roll the policy out until the abstract transition completes.

    The absolute subgoal stays fixed; the relative input is recomputed from
    it at every step.  Outcomes: ``success`` when the abstract state equals
    the expected successor, ``failure`` as soon as a contact-flagged atom
    switches to anything else (an unrecoverable wrong transition), and
    ``timeout`` after the skill horizon.
    """
    actions: list[Action] = []
    states = [x0]
    if skill.mode == "pass_through":
        assert isinstance(subgoal, Action)
        x = f(x0, subgoal)
        actions.append(subgoal)
        states.append(x)
        s = abstract(x, preds)
        return actions, states, "success" if s == expected else "failure"

    s0 = abstract(x0, preds)
    if s0 == expected:
        return [], states, "success"
    if probe is None:
        probe = ContactProbe(preds, list(x0.data))
    start_contact = probe.snapshot(x0)
    expected_contact = frozenset(a for a in expected.atoms if a.predicate.is_contact)
    # Fast path: while no contact atom has switched, the full abstract state
    # can only equal the expected successor if the operator has no contact
    # effects, so the per-step check reduces to the contact projection.
    contact_settles = expected_contact != start_contact

    kept = skill._kept(skill.scope_dim)
    sub_vec = (
        scoped_vector(subgoal, objects) if skill.mode == "subgoal" else None
    )
    x = x0
    for _ in range(skill.h_skill):
        cur = scoped_vector(x, objects)
        if sub_vec is not None:
            inp = np.concatenate([cur, (sub_vec - cur)[kept]])
        else:
            inp = cur
        u = skill.action_from_input(inp)
        x = f(x, u)
        actions.append(u)
        states.append(x)
        c = probe.snapshot(x)
        if contact_settles:
            if c == start_contact:
                continue
            s = abstract(x, preds)
            return actions, states, "success" if s == expected else "failure"
        s = abstract(x, preds)
        if s == expected:
            return actions, states, "success"
        if c != start_contact:
            return actions, states, "failure"
    return actions, states, "timeout"
