"""Command-line surface: gen-demos, train, eval, inspect, serve-demo.

Every flag mirrors an ExperimentConfig field; a JSON config file may set
any field, with flags taking precedence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from skillplan.harness import (
    ExperimentConfig,
    MetricsReport,
    evaluate,
    generate_demos,
    inspect_bundle,
    train,
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--env", dest="environment", help="environment name")
    p.add_argument("--demos", dest="num_demos", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--eval-tasks", dest="num_eval_tasks", type=int)
    p.add_argument("--timeout", dest="timeout_s", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--n-abstract", dest="n_abstract", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--mode", choices=("subgoal", "no_subgoal", "pass_through"))
    p.add_argument("--no-filter", dest="filter_enabled", action="store_false", default=None)
    p.add_argument("--policy-epochs", dest="policy_epochs", type=int)
    p.add_argument("--generator-epochs", dest="generator_epochs", type=int)
    p.add_argument("--classifier-epochs", dest="classifier_epochs", type=int)
    p.add_argument("--irr-train-objects", dest="irr_train_objects", type=int)
    p.add_argument("--irr-eval-objects", dest="irr_eval_objects", type=int)
    p.add_argument("--irr-static-preds", dest="irr_static_preds", type=int)
    p.add_argument("--irr-dynamic-preds", dest="irr_dynamic_preds", type=int)
    p.add_argument("--irr-random-preds", dest="irr_random_preds", type=int)
    p.add_argument("--workers", type=int)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {}
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig.from_dict(overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="skillplan",
        description="Learn neuro-symbolic skills from demonstrations and plan with them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-demos", help="generate scripted demonstrations")
    _add_config_flags(p_gen)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", type=Path, required=True)

    p_train = sub.add_parser("train", help="learn a skill bundle from demos")
    _add_config_flags(p_train)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--in", dest="demos_path", type=Path, required=True)
    p_train.add_argument("--out", type=Path, required=True)
    p_train.add_argument("--report", type=Path, help="write the training report JSON here")

    p_eval = sub.add_parser("eval", help="evaluate a bundle on held-out tasks")
    _add_config_flags(p_eval)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--bundle", type=Path, required=True)
    p_eval.add_argument("--csv", type=Path, help="write per-task rows here")

    p_inspect = sub.add_parser("inspect", help="print the contents of a bundle")
    p_inspect.add_argument("bundle", type=Path)

    p_serve = sub.add_parser("serve-demo", help="interactive demo-collection service")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--out", type=Path, required=True)
    p_serve.add_argument("--seed-base", type=int, default=0)
    p_serve.add_argument("--static-dir", type=Path, default=None)

    args = parser.parse_args(argv)

    if args.command == "gen-demos":
        config = _config_from_args(args)
        stats = generate_demos(config, args.seed, args.out)
        print(f"wrote {stats['written']} demos to {args.out} (skipped {stats['skipped']})")
        return 0

    if args.command == "train":
        config = _config_from_args(args)
        workers = config.workers or None
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report = train(config, args.demos_path, args.out, seed=args.seed, pool=pool)
        print(f"trained {len(report.dataset_sizes)} skills -> {args.out}")
        for name, size in report.dataset_sizes.items():
            print(f"  {name}: {size} segments")
        if args.report:
            args.report.write_text(json.dumps(report.to_dict(), indent=1))
        return 0

    if args.command == "eval":
        config = _config_from_args(args)
        workers = config.workers or None
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = evaluate(config, args.bundle, args.seed, pool=pool)
        metrics = MetricsReport.from_rows(rows)
        if args.csv:
            metrics.write_csv(args.csv)
        print(metrics.summary())
        return 0

    if args.command == "inspect":
        print(inspect_bundle(args.bundle))
        return 0

    if args.command == "serve-demo":
        from skillplan.demo_bridge.server import serve

        serve(
            port=args.port,
            out_path=args.out,
            seed_base=args.seed_base,
            static_dir=args.static_dir,
        )
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
