"""End-to-end orchestration: demo generation, training, evaluation, bundles.

One experiment seed drives one full pipeline: scripted demonstrations are
generated from the train task distribution, skills are learned from them,
and the resulting bundle is evaluated on held-out tasks under a wall-clock
timeout with replay verification of every reported success.  Identical
config and seed reproduce identical bundle bytes and identical metrics
(timing columns aside, which follow the clock).
"""

from __future__ import annotations

import dataclasses
import io
import json
import time
import zipfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from skillplan.core import Predicate, Task, abstract, goal_holds
from skillplan.envs import get_env
from skillplan.envs.base import Environment, ScriptedPolicyFailure
from skillplan.envs.demos_io import load_demos, save_demos
from skillplan.envs.irrelevant import inject_irrelevant, irrelevant_predicates
from skillplan.nn import NormStats, deserialize_mlp, serialize_mlp
from skillplan.operators import (
    filter_low_data,
    learn_operator,
    parse_operator,
    render_operator,
)
from skillplan.planner import PlannerConfig, plan
from skillplan.preprocess import lift, partition, segment_corpus
from skillplan.skills import (
    Skill,
    SkillNets,
    SkillTrainConfig,
    assemble_skill,
    prepare_skill_job,
    run_skill_job,
)
from skillplan.util import get_logger, stable_seed

logger = get_logger("skillplan.harness")

BUNDLE_FORMAT = 1
ENV_DEFAULT_N_ABSTRACT = {"cover": 8, "stick_button": 1000}


class TrainingFailure(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    """All knobs, with defaults matching the reference training recipe."""

    environment: str = "cover"
    num_demos: int = 1000
    seeds: tuple[int, ...] = (0, 1, 2)
    num_eval_tasks: int = 50
    timeout_s: float = 300.0
    horizon: int = 1000
    n_abstract: int | None = None  # None: per-environment default
    n_samples: int = 10
    node_budget: int = 1_000_000
    mode: str = "subgoal"  # subgoal | no_subgoal | pass_through
    filter_enabled: bool = True
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
    irr_train_objects: int = 0
    irr_eval_objects: int = 0
    irr_static_preds: int = 0
    irr_dynamic_preds: int = 0
    irr_random_preds: int = 0
    irr_seed: int = 0
    workers: int = 0  # 0: one per physical core

    def resolved_n_abstract(self) -> int:
        if self.n_abstract is not None:
            return self.n_abstract
        return ENV_DEFAULT_N_ABSTRACT.get(self.environment, 8)

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(
            n_abstract=self.resolved_n_abstract(),
            n_samples=self.n_samples,
            node_budget=self.node_budget,
            timeout_s=self.timeout_s,
        )

    def skill_train_config(self) -> SkillTrainConfig:
        return SkillTrainConfig(
            policy_hidden=tuple(self.policy_hidden),
            policy_epochs=self.policy_epochs,
            policy_lr=self.policy_lr,
            generator_hidden=tuple(self.generator_hidden),
            generator_epochs=self.generator_epochs,
            generator_lr=self.generator_lr,
            classifier_hidden=tuple(self.classifier_hidden),
            classifier_epochs=self.classifier_epochs,
            classifier_lr=self.classifier_lr,
            rejection_tries=self.rejection_tries,
            mode=self.mode,
        )

    def has_irrelevant_preds(self) -> bool:
        return bool(self.irr_static_preds or self.irr_dynamic_preds or self.irr_random_preds)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("seeds", "policy_hidden", "generator_hidden", "classifier_hidden"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("seeds", "policy_hidden", "generator_hidden", "classifier_hidden"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        if overrides:
            data.update(overrides)
        return cls.from_dict(data)


def extra_predicates(config: ExperimentConfig) -> tuple[Predicate, ...]:
    if not config.has_irrelevant_preds():
        return ()
    return irrelevant_predicates(
        config.irr_static_preds,
        config.irr_dynamic_preds,
        config.irr_random_preds,
        config.irr_seed,
    )


def pipeline_predicates(config: ExperimentConfig, env: Environment) -> tuple[Predicate, ...]:
    return tuple(env.predicates) + extra_predicates(config)


# ---------------------------------------------------------------------------
# Demo generation
# ---------------------------------------------------------------------------


def generate_demos(config: ExperimentConfig, seed: int, path: str | Path) -> dict:
    """Write exactly num_demos valid demonstrations; deterministic per seed."""
    env = get_env(config.environment)
    demos = []
    skipped = 0
    attempt = 0
    while len(demos) < config.num_demos:
        task_seed = stable_seed(seed, "demo-task", attempt)
        attempt += 1
        task = env.sample_task(task_seed, "train")
        if config.irr_train_objects:
            task, _ = inject_irrelevant(
                task, n_objects=config.irr_train_objects, seed=config.irr_seed
            )
        try:
            demos.append(env.scripted_policy(task))
        except ScriptedPolicyFailure as e:
            skipped += 1
            logger.info("skipping task %d: %s", attempt - 1, e)
    save_demos(path, env, demos)
    return {"written": len(demos), "skipped": skipped}


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainReport:
    environment: str
    seed: int
    num_demos: int
    num_segments: int
    num_datasets: int
    num_filtered: int
    dataset_sizes: dict[str, int]
    operator_texts: dict[str, str]
    loss_curves: dict[str, dict[str, list[float]]]
    learning_time_s: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _effects_key(lds) -> tuple:
    add = sorted(str(a) for a in lds.lifted_add_effects())
    dele = sorted(str(a) for a in lds.lifted_del_effects())
    return (tuple(add), tuple(dele))


def train(
    config: ExperimentConfig,
    demos_path: str | Path,
    bundle_path: str | Path,
    seed: int = 0,
    pool: ProcessPoolExecutor | None = None,
) -> TrainReport:
    """Full learning pipeline: preprocess, operators, policies, samplers."""
    t0 = time.monotonic()
    env = get_env(config.environment)
    preds = pipeline_predicates(config, env)
    demos = load_demos(demos_path, env, verify=True)
    single_step = config.mode == "pass_through"

    segments = segment_corpus(demos, preds, single_step=single_step)
    datasets = partition(segments, keep_empty_effects=single_step)
    lds_all = [lift(d) for d in datasets]
    lds_kept = filter_low_data(lds_all, config.filter_enabled)
    if not lds_kept:
        raise TrainingFailure("no skill datasets survived filtering")
    # Stable naming: largest dataset first, ties broken by effect text.
    lds_kept = sorted(lds_kept, key=lambda l: (-len(l.segments), _effects_key(l)))
    names = [f"{env.name}-op{i}" for i in range(len(lds_kept))]

    skill_cfg = config.skill_train_config()
    jobs = [
        prepare_skill_job(
            name, lds, lds_kept, skill_cfg, seed=stable_seed(seed, "skill-train")
        )
        for name, lds in zip(names, lds_kept)
    ]
    if pool is not None:
        nets_list = list(pool.map(run_skill_job, jobs))
    else:
        nets_list = [run_skill_job(job) for job in jobs]

    skills = []
    for name, lds, job, nets in zip(names, lds_kept, jobs, nets_list):
        operator = learn_operator(lds, name)
        skills.append(assemble_skill(name, lds, operator, job, nets))

    manifest = {
        "format": BUNDLE_FORMAT,
        "environment": env.name,
        "seed": seed,
        "mode": config.mode,
        "predicate_hash": predicates_hash(preds),
        "corpus_fingerprint": file_fingerprint(demos_path),
        "config": config.to_dict(),
        "skills": names,
    }
    save_bundle(bundle_path, manifest, skills)

    report = TrainReport(
        environment=env.name,
        seed=seed,
        num_demos=len(demos),
        num_segments=len(segments),
        num_datasets=len(lds_all),
        num_filtered=len(lds_all) - len(lds_kept),
        dataset_sizes={s.name: s.dataset_size for s in skills},
        operator_texts={s.name: render_operator(s.operator) for s in skills},
        loss_curves={
            s.name: {k: _thin(v) for k, v in s.nets.curves.items()} for s in skills
        },
        learning_time_s=time.monotonic() - t0,
    )
    return report


def _thin(curve: list[float], keep: int = 50) -> list[float]:
    if len(curve) <= keep:
        return curve
    idx = np.linspace(0, len(curve) - 1, keep).astype(int)
    return [curve[i] for i in idx]


def predicates_hash(preds) -> str:
    import hashlib

    text = ";".join(
        sorted(
            f"{p.name}/{','.join(t.name for t in p.arg_types)}/{int(p.is_contact)}"
            for p in preds
        )
    )
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def file_fingerprint(path: str | Path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Bundles (deterministic zip archives)
# ---------------------------------------------------------------------------

_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _zwrite(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def save_bundle(path: str | Path, manifest: dict, skills: list[Skill]) -> None:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        _zwrite(zf, "manifest.json", json.dumps(manifest, sort_keys=True, indent=1).encode())
        for skill in skills:
            base = f"skills/{skill.name}"
            meta = {
                "name": skill.name,
                "mode": skill.mode,
                "h_skill": skill.h_skill,
                "scope_dim": skill.scope_dim,
                "action_dim": skill.action_dim,
                "static_dims": list(skill.static_dims),
                "static_values": [float(v) for v in skill.static_values],
                "dataset_size": skill.dataset_size,
                "rejection_tries": skill.rejection_tries,
                "variables": [
                    {"name": v.name, "type": v.otype.name} for v in skill.variables
                ],
            }
            _zwrite(zf, f"{base}/meta.json", json.dumps(meta, sort_keys=True, indent=1).encode())
            _zwrite(zf, f"{base}/operator.txt", render_operator(skill.operator).encode())
            nets = skill.nets
            for label, net, stats in (
                ("policy", nets.policy, (nets.policy_in, nets.policy_out)),
                ("generator", nets.generator, (nets.generator_in,)),
                ("classifier", nets.classifier, (nets.classifier_in,)),
            ):
                if net is None:
                    continue
                _zwrite(zf, f"{base}/{label}.net", serialize_mlp(net))
                blob = b"".join(s.to_bytes() for s in stats if s is not None)
                _zwrite(zf, f"{base}/{label}.norm", blob)
    Path(path).write_bytes(buf.getvalue())


class BundleError(RuntimeError):
    pass


def load_bundle(path: str | Path) -> tuple[dict, list[Skill]]:
    with zipfile.ZipFile(path) as zf:
        names = set(zf.namelist())
        if "manifest.json" not in names:
            raise BundleError("bundle has no manifest.json")
        manifest = json.loads(zf.read("manifest.json"))
        env = get_env(manifest["environment"])
        config = ExperimentConfig.from_dict(manifest["config"])
        preds = pipeline_predicates(config, env)
        skills = []
        for skill_name in manifest["skills"]:
            base = f"skills/{skill_name}"
            try:
                meta = json.loads(zf.read(f"{base}/meta.json"))
                op_text = zf.read(f"{base}/operator.txt").decode()
            except KeyError as e:
                raise BundleError(f"bundle section missing: {e.args[0]}")
            operator = parse_operator(op_text, preds, env.types)
            nets = SkillNets(skill_name)
            if f"{base}/policy.net" in names:
                nets.policy = deserialize_mlp(zf.read(f"{base}/policy.net"))
                blob = zf.read(f"{base}/policy.norm")
                nets.policy_in, off = NormStats.from_bytes(blob)
                nets.policy_out, _ = NormStats.from_bytes(blob, off)
            if f"{base}/generator.net" in names:
                nets.generator = deserialize_mlp(zf.read(f"{base}/generator.net"))
                nets.generator_in, _ = NormStats.from_bytes(zf.read(f"{base}/generator.norm"))
            if f"{base}/classifier.net" in names:
                nets.classifier = deserialize_mlp(zf.read(f"{base}/classifier.net"))
                nets.classifier_in, _ = NormStats.from_bytes(zf.read(f"{base}/classifier.norm"))
            skills.append(
                Skill(
                    name=skill_name,
                    operator=operator,
                    mode=meta["mode"],
                    h_skill=int(meta["h_skill"]),
                    scope_dim=int(meta["scope_dim"]),
                    action_dim=int(meta["action_dim"]),
                    static_dims=tuple(meta["static_dims"]),
                    static_values=np.array(meta["static_values"], dtype=np.float64),
                    dataset_size=int(meta["dataset_size"]),
                    nets=nets,
                    rejection_tries=int(meta["rejection_tries"]),
                )
            )
    return manifest, skills


def inspect_bundle(path: str | Path) -> str:
    manifest, skills = load_bundle(path)
    lines = [
        f"bundle: {path}",
        f"environment: {manifest['environment']}",
        f"mode: {manifest['mode']}",
        f"seed: {manifest['seed']}",
        f"predicate_hash: {manifest['predicate_hash']}",
        f"corpus_fingerprint: {manifest['corpus_fingerprint']}",
        f"skills: {len(skills)}",
        "",
    ]
    for skill in skills:
        lines.append(render_operator(skill.operator).rstrip())
        lines.append(f"  segments: {skill.dataset_size}")
        lines.append(f"  skill-horizon: {skill.h_skill}")
        lines.append(f"  static-dims: {list(skill.static_dims)}")
        for label, net in (
            ("policy", skill.nets.policy),
            ("generator", skill.nets.generator),
            ("classifier", skill.nets.classifier),
        ):
            if net is not None:
                lines.append(f"  {label}: {'x'.join(str(s) for s in net.sizes)} ({net.head})")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_WORKER_CACHE: dict[str, tuple[dict, list[Skill]]] = {}


@dataclass
class TaskRow:
    seed: int
    task_index: int
    solved: bool
    wall_time_s: float
    nodes_created: int
    plans_tried: int
    samples_drawn: int
    solution_length: int

    @staticmethod
    def csv_header() -> str:
        return "seed,task,solved,wall_time_s,nodes_created,plans_tried,samples_drawn,solution_length"

    def csv(self) -> str:
        return (
            f"{self.seed},{self.task_index},{int(self.solved)},{self.wall_time_s:.3f},"
            f"{self.nodes_created},{self.plans_tried},{self.samples_drawn},{self.solution_length}"
        )


def eval_task(args: tuple) -> TaskRow:
    """Worker entry: plan one evaluation task and verify by replay."""
    bundle_path, config_dict, seed, index = args
    config = ExperimentConfig.from_dict(config_dict)
    if bundle_path not in _WORKER_CACHE:
        _WORKER_CACHE[bundle_path] = load_bundle(bundle_path)
    manifest, skills = _WORKER_CACHE[bundle_path]
    env = get_env(manifest["environment"])
    preds = pipeline_predicates(config, env)
    task = env.sample_task(stable_seed(seed, "eval-task", index), "eval")
    if config.irr_eval_objects:
        task, _ = inject_irrelevant(
            task, n_objects=config.irr_eval_objects, seed=config.irr_seed
        )
    actions, metrics = plan(
        task,
        skills,
        env.transition,
        preds,
        config.planner_config(),
        seed_label=(seed, index),
    )
    solved = False
    if actions is not None and len(actions) <= task.horizon:
        x = task.init
        for u in actions:
            x = env.transition(x, u)
        solved = goal_holds(task.goal, abstract(x, preds))
    return TaskRow(
        seed=seed,
        task_index=index,
        solved=solved,
        wall_time_s=metrics.wall_time_s,
        nodes_created=metrics.nodes_created,
        plans_tried=metrics.plans_tried,
        samples_drawn=metrics.samples_drawn,
        solution_length=metrics.solution_length,
    )


def evaluate(
    config: ExperimentConfig,
    bundle_path: str | Path,
    seed: int,
    pool: ProcessPoolExecutor | None = None,
) -> list[TaskRow]:
    manifest, _ = load_bundle(bundle_path)
    if manifest["environment"] != config.environment:
        raise BundleError(
            f"bundle trained for {manifest['environment']!r}, "
            f"config asks for {config.environment!r}"
        )
    args = [
        (str(bundle_path), config.to_dict(), seed, i)
        for i in range(config.num_eval_tasks)
    ]
    if pool is not None:
        rows = list(pool.map(eval_task, args))
    else:
        rows = [eval_task(a) for a in args]
    return rows


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class MetricsReport:
    per_seed_success: dict[int, float]
    mean_success: float
    std_success: float
    rows: list[TaskRow]
    learning_time_s: float = 0.0
    evaluation_time_s: float = 0.0

    @classmethod
    def from_rows(cls, rows: list[TaskRow], **kw) -> "MetricsReport":
        by_seed: dict[int, list[TaskRow]] = {}
        for row in rows:
            by_seed.setdefault(row.seed, []).append(row)
        per_seed = {
            s: 100.0 * sum(r.solved for r in rs) / len(rs) for s, rs in by_seed.items()
        }
        rates = list(per_seed.values())
        return cls(
            per_seed_success=per_seed,
            mean_success=float(np.mean(rates)) if rates else 0.0,
            std_success=float(np.std(rates)) if rates else 0.0,
            rows=rows,
            **kw,
        )

    def write_csv(self, path: str | Path) -> None:
        lines = [TaskRow.csv_header()] + [r.csv() for r in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")

    def summary(self) -> str:
        lines = [
            f"tasks solved: {self.mean_success:.2f}% "
            f"(std {self.std_success:.2f} over {len(self.per_seed_success)} seeds)"
        ]
        for seed, rate in sorted(self.per_seed_success.items()):
            n = sum(1 for r in self.rows if r.seed == seed)
            lines.append(f"  seed {seed}: {rate:.2f}% of {n}")
        if self.rows:
            solved = [r for r in self.rows if r.solved]
            lines.append(
                f"mean wall time {np.mean([r.wall_time_s for r in self.rows]):.2f}s, "
                f"mean nodes created {np.mean([r.nodes_created for r in self.rows]):.1f}, "
                f"mean solution length "
                f"{np.mean([r.solution_length for r in solved]):.1f}"
                if solved
                else "no tasks solved"
            )
        return "\n".join(lines)


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> MetricsReport:
    """Demos, training, and evaluation for every seed in the config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[TaskRow] = []
    learn_time = 0.0
    eval_time = 0.0
    workers = config.workers or None
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for seed in config.seeds:
            demos_path = out / f"demos_seed{seed}.jsonl"
            bundle_path = out / f"bundle_seed{seed}.zip"
            if not demos_path.exists():
                generate_demos(config, seed, demos_path)
            t0 = time.monotonic()
            report = train(config, demos_path, bundle_path, seed=seed, pool=pool)
            learn_time += report.learning_time_s
            (out / f"train_report_seed{seed}.json").write_text(
                json.dumps(report.to_dict(), indent=1)
            )
            t0 = time.monotonic()
            rows.extend(evaluate(config, bundle_path, seed, pool=pool))
            eval_time += time.monotonic() - t0
    metrics = MetricsReport.from_rows(
        rows, learning_time_s=learn_time, evaluation_time_s=eval_time
    )
    metrics.write_csv(out / "metrics.csv")
    (out / "summary.txt").write_text(metrics.summary() + "\n")
    return metrics
